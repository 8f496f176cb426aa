#include "speccart/radiomap.hpp"

#include <algorithm>
#include <cmath>

#include "speccart/common.hpp"

namespace speccart {

void SampleSet::validate() const {
  require(locations.rows() >= 1, "samples: need at least one location");
  require(locations.rows() == values.size(), "samples: location/value count mismatch");
  if (reliability.size() > 0) {
    require(reliability.size() == values.size(), "samples: reliability count mismatch");
  }
  for (int i = 0; i < locations.rows(); ++i) {
    for (int j = i + 1; j < locations.rows(); ++j) {
      require((locations.row(i) - locations.row(j)).norm() > 0.0,
              "samples: duplicate locations");
    }
  }
}

void RadioMapGrid::validate() const {
  require(nx >= 2 && ny >= 2, "grid: resolution must be at least 2x2");
  require(x1 > x0 && y1 > y0, "grid: empty extent");
  require(values.rows() == nx && values.cols() == ny, "grid: value shape mismatch");
  require(values.allFinite(), "grid: non-finite values");
}

double median(Eigen::VectorXd v) {
  require(v.size() > 0, "median: empty");
  std::sort(v.data(), v.data() + v.size());
  int n = static_cast<int>(v.size());
  return (n % 2 == 1) ? v(n / 2) : 0.5 * (v(n / 2 - 1) + v(n / 2));
}

WeightVector idw_weights(const Eigen::Vector2d& query, const SampleSet& samples, double exponent) {
  require(exponent > 0.0, "idw: exponent must be positive");
  samples.validate();
  const int n = samples.size();
  WeightVector wv;
  wv.provenance = WeightProvenance::kIdw;
  wv.w = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    double d = (query - samples.locations.row(i).transpose()).norm();
    if (d < 1e-9) {  // exact hit: the sample value is the answer
      wv.w.setZero();
      wv.w(i) = 1.0;
      return wv;
    }
    wv.w(i) = std::pow(d, -exponent);
  }
  wv.w /= wv.w.sum();
  return wv;
}

double idw(const Eigen::Vector2d& query, const SampleSet& samples, double exponent) {
  return idw_weights(query, samples, exponent).w.dot(samples.values);
}

WeightVector reliability_weights(const WeightVector& base, const Eigen::VectorXd& values,
                                 double beta) {
  base.validate();
  require(beta >= 0.0, "reliability_weights: beta must be nonnegative");
  require(base.w.size() == values.size(), "reliability_weights: size mismatch");
  double med = median(values);
  WeightVector out;
  out.provenance = WeightProvenance::kReliability;
  out.w = base.w.array() * (-beta * (values.array() - med).abs()).exp();
  double mass = out.w.sum();
  require(mass > 0.0, "reliability_weights: weights vanished");
  out.w /= mass;
  return out;
}

double solve_reliability_beta(const WeightVector& base, const Eigen::VectorXd& values, int index,
                              double target_weight, double lo, double hi) {
  require(index >= 0 && index < base.w.size(), "solve_reliability_beta: bad index");
  auto weight_at = [&](double beta) {
    return reliability_weights(base, values, beta).w(index);
  };
  double w_lo = weight_at(lo);
  double w_hi = weight_at(hi);
  require((w_lo - target_weight) * (w_hi - target_weight) <= 0.0,
          "solve_reliability_beta: target not bracketed on [lo, hi]");
  bool decreasing = w_lo > w_hi;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double w = weight_at(mid);
    if ((w > target_weight) == decreasing) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double nw_interp(const Eigen::Vector2d& query, const SampleSet& samples, double bandwidth) {
  samples.validate();
  std::vector<Eigen::VectorXd> keys;
  keys.reserve(samples.size());
  for (int i = 0; i < samples.size(); ++i) {
    keys.push_back(samples.locations.row(i).transpose());
  }
  return nw_estimate(query, keys, samples.values, bandwidth);
}

KrigingResult kriging(const Eigen::Vector2d& query, const SampleSet& samples, double mean,
                      double variance, double lengthscale, double noise_var) {
  samples.validate();
  require(variance > 0.0 && lengthscale > 0.0, "kriging: variance and lengthscale must be positive");
  require(noise_var >= 0.0, "kriging: negative noise variance");
  const int n = samples.size();
  auto cov = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return variance * std::exp(-(a - b).squaredNorm() / (2.0 * lengthscale * lengthscale));
  };
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      K(i, j) = cov(samples.locations.row(i).transpose(), samples.locations.row(j).transpose());
    }
    K(i, i) += noise_var;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("kriging: covariance matrix is not positive definite");
  }
  Eigen::VectorXd k0(n);
  for (int i = 0; i < n; ++i) k0(i) = cov(query, samples.locations.row(i).transpose());
  Eigen::VectorXd alpha = llt.solve(samples.values.array() - mean);
  KrigingResult res;
  res.estimate = mean + k0.dot(alpha);
  res.variance = std::max(0.0, variance - k0.dot(llt.solve(k0)));
  return res;
}

double FieldSpec::eval(const Eigen::Vector2d& p) const {
  double v = trend_offset + trend_x * p.x() + trend_y * p.y();
  for (const auto& b : bumps) {
    v += b.amplitude * std::exp(-(p - b.center).squaredNorm() / (2.0 * b.width * b.width));
  }
  return v;
}

RadioMapGrid eval_on_grid(double x0, double x1, double y0, double y1, int nx, int ny,
                          const std::function<double(const Eigen::Vector2d&)>& f) {
  RadioMapGrid g;
  g.x0 = x0;
  g.x1 = x1;
  g.y0 = y0;
  g.y1 = y1;
  g.nx = nx;
  g.ny = ny;
  g.values.resize(nx, ny);
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      g.values(ix, iy) = f(Eigen::Vector2d(g.cell_x(ix), g.cell_y(iy)));
    }
  }
  g.validate();
  return g;
}

RadioMapGrid gen_field(const FieldSpec& spec, double x0, double x1, double y0, double y1, int nx,
                       int ny) {
  for (const auto& b : spec.bumps) require(b.width > 0.0, "gen_field: bump width must be positive");
  return eval_on_grid(x0, x1, y0, y1, nx, ny,
                      [&](const Eigen::Vector2d& p) { return spec.eval(p); });
}

AttnRemModel AttnRemModel::init(int scorer_hidden, int predictor_hidden, Rng& rng) {
  AttnRemModel m;
  m.scorer = Mlp::init(5, scorer_hidden, rng);
  m.predictor = Mlp::init(3, predictor_hidden, rng);
  return m;
}

Eigen::VectorXd AttnRemModel::pack() const {
  Eigen::VectorXd theta(param_count());
  theta << scorer.pack(), predictor.pack();
  return theta;
}

void AttnRemModel::unpack(const Eigen::VectorXd& theta) {
  require(theta.size() == param_count(), "AttnRemModel::unpack: size mismatch");
  scorer.unpack(theta.head(scorer.param_count()));
  predictor.unpack(theta.tail(predictor.param_count()));
}

namespace {

Eigen::VectorXd scorer_input(const Eigen::Vector2d& q, const SampleSet& s, int i) {
  Eigen::VectorXd u(5);
  u << q.x(), q.y(), s.locations(i, 0), s.locations(i, 1), s.values(i);
  return u;
}

}  // namespace

double AttnRemModel::predict(const Eigen::Vector2d& query, const SampleSet& samples) const {
  const int n = samples.size();
  Eigen::VectorXd scores(n);
  for (int i = 0; i < n; ++i) scores(i) = scorer.forward(scorer_input(query, samples, i));
  Eigen::VectorXd alpha = softmax(scores);
  double agg = alpha.dot(samples.values);
  Eigen::VectorXd pin(3);
  pin << query.x(), query.y(), agg;
  return predictor.forward(pin);
}

double AttnRemModel::predict_grad(const Eigen::Vector2d& query, const SampleSet& samples,
                                  Eigen::VectorXd& grad) const {
  const int n = samples.size();
  std::vector<Eigen::VectorXd> inputs(n), hiddens(n);
  Eigen::VectorXd scores(n);
  for (int i = 0; i < n; ++i) {
    inputs[i] = scorer_input(query, samples, i);
    scores(i) = scorer.forward_cached(inputs[i], hiddens[i]);
  }
  Eigen::VectorXd alpha = softmax(scores);
  double agg = alpha.dot(samples.values);
  Eigen::VectorXd pin(3);
  pin << query.x(), query.y(), agg;
  Eigen::VectorXd phidden;
  double out = predictor.forward_cached(pin, phidden);

  // Backward with d(out)/d(out) = 1.
  Mlp::Grad pred_grad = predictor.zero_grad();
  Eigen::VectorXd d_pin;
  predictor.backward(pin, phidden, 1.0, pred_grad, &d_pin);
  double d_agg = d_pin(2);

  // d agg / d score_j = alpha_j (y_j - agg)
  Eigen::VectorXd d_scores =
      d_agg * (alpha.array() * (samples.values.array() - agg)).matrix();
  Mlp::Grad score_grad = scorer.zero_grad();
  for (int i = 0; i < n; ++i) {
    scorer.backward(inputs[i], hiddens[i], d_scores(i), score_grad);
  }

  grad.resize(param_count());
  grad << Mlp::pack_grad(score_grad), Mlp::pack_grad(pred_grad);
  return out;
}

RemTrainResult attn_rem_train(const SampleSet& samples, const Eigen::MatrixX2d& queries,
                              const Eigen::VectorXd& targets, const RemTrainConfig& cfg) {
  samples.validate();
  require(queries.rows() == targets.size(), "attn_rem_train: query/target count mismatch");
  require(queries.rows() >= 1, "attn_rem_train: need at least one training query");
  require(cfg.epochs >= 1 && cfg.learning_rate > 0.0, "attn_rem_train: bad hyperparameters");

  Rng rng(cfg.seed);
  RemTrainResult out;
  out.model = AttnRemModel::init(cfg.scorer_hidden, cfg.predictor_hidden, rng);
  const int m = static_cast<int>(queries.rows());
  Eigen::VectorXd theta = out.model.pack();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Eigen::VectorXd grad_total = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd g;
    double loss = 0.0;
    for (int k = 0; k < m; ++k) {
      double pred = out.model.predict_grad(queries.row(k).transpose(), samples, g);
      double err = pred - targets(k);
      loss += err * err;
      grad_total += (2.0 / m) * err * g;
    }
    loss /= m;
    out.loss_curve.push_back(loss);
    if (!std::isfinite(loss) || loss > 1e6) {
      throw NumericalError("attn_rem_train: diverged at epoch " + std::to_string(epoch) +
                           " with loss " + std::to_string(loss));
    }
    clip_gradient(grad_total, cfg.clip_norm);
    theta -= cfg.learning_rate * grad_total;
    out.model.unpack(theta);
  }
  return out;
}

RemMetrics rem_metrics(const RadioMapGrid& pred, const RadioMapGrid& truth) {
  pred.validate();
  truth.validate();
  require(pred.nx == truth.nx && pred.ny == truth.ny, "rem_metrics: grid shape mismatch");

  RemMetrics m;
  const auto diff = (pred.values - truth.values).eval();
  const int n = static_cast<int>(diff.size());
  m.rmse = std::sqrt(diff.array().square().sum() / n);
  m.mae = diff.array().abs().sum() / n;
  m.maxae = diff.array().abs().maxCoeff();
  double mean_truth = truth.values.mean();
  double ss_tot = (truth.values.array() - mean_truth).square().sum();
  if (ss_tot > 0.0) {
    m.r2 = 1.0 - diff.array().square().sum() / ss_tot;
  }
  return m;
}

}  // namespace speccart
