#include "speccart/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "speccart/common.hpp"

namespace speccart {

void ChannelSet::validate() const {
  require(beta.size() > 0, "channels: empty");
  require(beta.size() == sigma.size(), "channels: beta/sigma size mismatch");
  require((beta.array() > 0.0).all(), "channels: gains must be positive");
  require((sigma.array() > 0.0).all(), "channels: noise powers must be positive");
  require(total_power > 0.0, "channels: total power must be positive");
  require(total_interference >= 0.0, "channels: total interference must be nonnegative");
}

double AllocationResult::capacity_bits() const { return capacity_nats / std::log(2.0); }

double game_capacity(const Eigen::VectorXd& p, const Eigen::VectorXd& n,
                     const Eigen::VectorXd& beta, const Eigen::VectorXd& sigma) {
  KahanSum acc;
  for (int i = 0; i < p.size(); ++i) {
    acc.add(std::log1p(beta(i) * p(i) / (sigma(i) + n(i))));
  }
  return acc.value();
}

AllocationResult waterfill(const Eigen::VectorXd& beta, const Eigen::VectorXd& sigma_eff,
                           double total_power) {
  require(beta.size() == sigma_eff.size(), "waterfill: size mismatch");
  require((beta.array() > 0.0).all() && (sigma_eff.array() > 0.0).all(),
          "waterfill: beta and sigma must be positive");
  require(total_power > 0.0, "waterfill: total power must be positive");

  const int m = static_cast<int>(beta.size());
  Eigen::VectorXd base = sigma_eff.cwiseQuotient(beta);  // a_i = sigma_i / beta_i
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return base(a) < base(b); });

  // With k lowest-base channels active, nu = (P + sum of their bases) / k.
  double nu = 0.0;
  double acc = 0.0;
  for (int k = 1; k <= m; ++k) {
    acc += base(order[k - 1]);
    double candidate = (total_power + acc) / k;
    if (k < m && candidate > base(order[k])) continue;  // next channel also floods
    nu = candidate;
    break;
  }

  AllocationResult res;
  res.nu = nu;
  res.p = (nu - base.array()).cwiseMax(0.0);
  res.n = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    if (res.p(i) > 0.0) res.active_set.push_back(i);
  }
  res.capacity_nats = game_capacity(res.p, res.n, beta, sigma_eff);

  double resid = std::abs(res.p.sum() - total_power);
  for (int i = 0; i < m; ++i) {
    if (res.p(i) > 0.0) {
      resid = std::max(resid, std::abs(nu - base(i) - res.p(i)));
    } else {
      resid = std::max(resid, std::max(0.0, nu - base(i)));
    }
  }
  res.kkt_residual = resid;
  return res;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double total) {
  require(total >= 0.0, "project_simplex: negative total");
  const int m = static_cast<int>(v.size());
  if (total == 0.0) return Eigen::VectorXd::Zero(m);
  Eigen::VectorXd u = v;
  std::sort(u.data(), u.data() + m, std::greater<double>());
  double cum = 0.0;
  double tau = 0.0;
  for (int i = 0; i < m; ++i) {
    cum += u(i);
    double t = (cum - total) / (i + 1);
    if (u(i) - t > 0.0) tau = t;
  }
  return (v.array() - tau).cwiseMax(0.0);
}

namespace {

Eigen::VectorXd adversary_gradient(const Eigen::VectorXd& p, const Eigen::VectorXd& beta,
                                   const Eigen::VectorXd& sigma, const Eigen::VectorXd& n) {
  // d/dn_i log(1 + b p/(s+n)) = -b p / ((s+n)(s+n+bp))
  Eigen::VectorXd g(p.size());
  for (int i = 0; i < p.size(); ++i) {
    double sn = sigma(i) + n(i);
    g(i) = -beta(i) * p(i) / (sn * (sn + beta(i) * p(i)));
  }
  return g;
}

double adversary_kkt(const Eigen::VectorXd& g, const Eigen::VectorXd& n, double total) {
  // Minimization over the simplex: active coords share the lowest gradient.
  double lambda = 0.0;
  int count = 0;
  double thresh = 1e-12 * std::max(1.0, total);
  for (int i = 0; i < n.size(); ++i) {
    if (n(i) > thresh) {
      lambda += g(i);
      ++count;
    }
  }
  if (count == 0) return 0.0;
  lambda /= count;
  double resid = 0.0;
  for (int i = 0; i < n.size(); ++i) {
    if (n(i) > thresh) {
      resid = std::max(resid, std::abs(g(i) - lambda));
    } else {
      resid = std::max(resid, std::max(0.0, lambda - g(i)));
    }
  }
  return resid;
}

}  // namespace

AdversaryResult adversary_response(const Eigen::VectorXd& p, const Eigen::VectorXd& beta,
                                   const Eigen::VectorXd& sigma, double total_interference,
                                   int max_iters, double kkt_tol) {
  require(p.size() == beta.size() && p.size() == sigma.size(), "adversary: size mismatch");
  require((p.array() >= 0.0).all(), "adversary: p must be nonnegative");
  require(total_interference >= 0.0, "adversary: negative interference budget");

  const int m = static_cast<int>(p.size());
  AdversaryResult res;
  if (total_interference == 0.0) {
    res.n = Eigen::VectorXd::Zero(m);
    return res;
  }

  Eigen::VectorXd n = Eigen::VectorXd::Constant(m, total_interference / m);
  double f = game_capacity(p, n, beta, sigma);
  double step = total_interference;  // initial scale; Armijo shrinks as needed

  for (res.iters = 0; res.iters < max_iters; ++res.iters) {
    Eigen::VectorXd g = adversary_gradient(p, beta, sigma, n);
    res.kkt_residual = adversary_kkt(g, n, total_interference);
    if (res.kkt_residual < kkt_tol) break;

    double t = step;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd n_try = project_simplex(n - t * g, total_interference);
      double f_try = game_capacity(p, n_try, beta, sigma);
      // Armijo against the projected step direction.
      double decrease = g.dot(n - n_try);
      if (f_try <= f - 1e-4 * decrease && f_try <= f) {
        n = n_try;
        f = f_try;
        step = t * 2.0;  // allow growth again after a success
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // step underflow; KKT residual reports the state
  }

  Eigen::VectorXd g = adversary_gradient(p, beta, sigma, n);
  res.kkt_residual = adversary_kkt(g, n, total_interference);
  res.converged = res.kkt_residual < 1e-6;
  res.n = n;

  // Common gradient over active channels; equals the interference water
  // level mu = 1/(beta nu) - 1/(sigma + n*) at a saddle point.
  double lambda = 0.0;
  int count = 0;
  for (int i = 0; i < m; ++i) {
    if (n(i) > 1e-12 * total_interference) {
      lambda += g(i);
      ++count;
    }
  }
  res.mu = count > 0 ? lambda / count : 0.0;
  return res;
}

AllocationResult minimax_waterfill(const ChannelSet& channels, int max_rounds, double tol) {
  channels.validate();
  const int m = channels.size();
  const double P = channels.total_power;
  const double N = channels.total_interference;

  Eigen::VectorXd n = N > 0.0 ? Eigen::VectorXd::Constant(m, N / m) : Eigen::VectorXd::Zero(m);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(m);
  AllocationResult res;
  double prev_move = std::numeric_limits<double>::infinity();
  double mu = 0.0;

  int round = 0;
  bool settled = false;
  for (; round < max_rounds; ++round) {
    AllocationResult wf = waterfill(channels.beta, channels.sigma + n, P);
    AdversaryResult adv = adversary_response(wf.p, channels.beta, channels.sigma, N);
    double move = (wf.p - p).lpNorm<Eigen::Infinity>();
    move = std::max(move, (adv.n - n).lpNorm<Eigen::Infinity>());

    p = wf.p;
    res.nu = wf.nu;
    mu = adv.mu;
    if (move > prev_move) {
      n = 0.5 * n + 0.5 * adv.n;  // damp when alternation oscillates
    } else {
      n = adv.n;
    }
    prev_move = move;
    if (move < tol) {
      settled = true;
      ++round;
      break;
    }
  }

  res.p = p;
  res.n = n;
  res.mu = mu;
  res.rounds = round;
  res.converged = settled;
  for (int i = 0; i < m; ++i) {
    if (p(i) > 0.0) res.active_set.push_back(i);
  }
  res.capacity_nats = game_capacity(p, n, channels.beta, channels.sigma);

  AllocationResult wf_check = waterfill(channels.beta, channels.sigma + n, P);
  AdversaryResult adv_check = adversary_response(p, channels.beta, channels.sigma, N);
  res.kkt_residual = std::max(wf_check.kkt_residual, adv_check.kkt_residual);
  return res;
}

int beam_switch(const Eigen::VectorXd& rates) {
  require(rates.size() > 0, "beam_switch: empty rate vector");
  int best = 0;
  for (int i = 1; i < rates.size(); ++i) {
    if (rates(i) > rates(best)) best = i;  // strict: ties keep the lowest index
  }
  return best;
}

BeamHopResult beam_hop(const Eigen::MatrixXd& rates, int bmax) {
  const int T = static_cast<int>(rates.rows());
  const int B = static_cast<int>(rates.cols());
  require(T > 0 && B > 0, "beam_hop: empty rate matrix");
  require(bmax >= 1 && bmax <= B, "beam_hop: Bmax must be in [1, B]");

  BeamHopResult res;
  res.schedule = Eigen::MatrixXi::Zero(T, B);
  KahanSum obj;
  std::vector<int> order(B);
  for (int t = 0; t < T; ++t) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (rates(t, a) != rates(t, b)) return rates(t, a) > rates(t, b);
      return a < b;  // ties by lowest beam index
    });
    for (int k = 0; k < bmax; ++k) {
      res.schedule(t, order[k]) = 1;
      obj.add(rates(t, order[k]));
    }
  }
  res.objective = obj.value();
  return res;
}

}  // namespace speccart
