#include "speccart/localization.hpp"

#include <algorithm>
#include <cmath>

#include "speccart/attention.hpp"
#include "speccart/common.hpp"

namespace speccart {

Eigen::MatrixXd nw_time_weights(const std::vector<double>& times, double sigma) {
  require(sigma > 0.0, "nw_time_weights: sigma must be positive");
  require(!times.empty(), "nw_time_weights: empty times");
  for (std::size_t i = 1; i < times.size(); ++i) {
    require(times[i] > times[i - 1], "nw_time_weights: times must be strictly increasing");
  }
  const int n = static_cast<int>(times.size());
  Eigen::MatrixXd W(n, n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd log_k(n);
    for (int j = 0; j < n; ++j) {
      double dt = times[i] - times[j];
      log_k(j) = -dt * dt / (2.0 * sigma * sigma);
    }
    W.row(i) = softmax(log_k).transpose();
  }
  return W;
}

std::vector<Eigen::Vector2d> nw_traj_smooth(const std::vector<double>& times,
                                            const std::vector<Eigen::Vector2d>& hypotheses,
                                            double sigma) {
  require(times.size() == hypotheses.size(), "nw_traj_smooth: size mismatch");
  Eigen::MatrixXd W = nw_time_weights(times, sigma);
  std::vector<Eigen::Vector2d> out(hypotheses.size());
  for (int i = 0; i < W.rows(); ++i) {
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    for (int j = 0; j < W.cols(); ++j) acc += W(i, j) * hypotheses[j];
    out[i] = acc;
  }
  return out;
}

std::vector<Eigen::Vector2d> moving_average(const std::vector<Eigen::Vector2d>& hypotheses,
                                            int window) {
  require(window >= 1 && window % 2 == 1, "moving_average: window must be odd and >= 1");
  const int n = static_cast<int>(hypotheses.size());
  const int half = window / 2;
  std::vector<Eigen::Vector2d> out(n);
  for (int i = 0; i < n; ++i) {
    int lo = std::max(0, i - half);
    int hi = std::min(n - 1, i + half);
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    for (int j = lo; j <= hi; ++j) acc += hypotheses[j];
    out[i] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

double smoothness_metric(const std::vector<Eigen::Vector2d>& traj) {
  require(traj.size() >= 3, "smoothness_metric: need at least 3 points");
  KahanSum acc;
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    acc.add((traj[i + 1] - 2.0 * traj[i] + traj[i - 1]).squaredNorm());
  }
  return acc.value() / static_cast<double>(traj.size() - 2);
}

double quantile(std::vector<double> values, double q) {
  require(!values.empty(), "quantile: empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile: q must be in [0,1]");
  std::sort(values.begin(), values.end());
  double h = q * (static_cast<double>(values.size()) - 1.0);
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, values.size() - 1);
  double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

ErrorReport error_report(const std::vector<Eigen::Vector2d>& estimates,
                         const std::vector<Eigen::Vector2d>& truth) {
  require(!estimates.empty(), "error_report: empty input");
  require(estimates.size() == truth.size(), "error_report: length mismatch");
  std::vector<double> errs(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) errs[i] = (estimates[i] - truth[i]).norm();

  ErrorReport rep;
  KahanSum acc;
  for (double e : errs) acc.add(e);
  rep.mean = acc.value() / static_cast<double>(errs.size());
  rep.p90 = quantile(errs, 0.9);
  rep.max = *std::max_element(errs.begin(), errs.end());

  std::vector<double> sorted = errs;
  std::sort(sorted.begin(), sorted.end());
  rep.cdf.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    rep.cdf.emplace_back(sorted[i], static_cast<double>(i + 1) / static_cast<double>(sorted.size()));
  }
  return rep;
}

// --- Corrector ---------------------------------------------------------------

namespace {

Eigen::MatrixXd xavier(int rows, int cols, Rng& rng) {
  double s = std::sqrt(6.0 / (rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-s, s);
  return m;
}

void pack_matrix(Eigen::VectorXd& theta, int& at, const Eigen::MatrixXd& m) {
  theta.segment(at, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  at += static_cast<int>(m.size());
}

void unpack_matrix(const Eigen::VectorXd& theta, int& at, Eigen::MatrixXd& m) {
  Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = theta.segment(at, m.size());
  at += static_cast<int>(m.size());
}

}  // namespace

CorrectorParams CorrectorParams::init(const CorrectorConfig& cfg, Rng& rng) {
  require(cfg.window >= 1 && cfg.temporal_heads >= 1, "corrector: bad architecture config");
  CorrectorParams p;
  p.cfg = cfg;
  p.spatial_wq = xavier(cfg.num_features, cfg.spatial_dk, rng);
  p.spatial_wk = xavier(cfg.num_features, cfg.spatial_dk, rng);
  p.spatial_wv = xavier(cfg.num_features, cfg.d_z, rng);
  for (int h = 0; h < cfg.temporal_heads; ++h) {
    p.temporal_wq.push_back(xavier(cfg.d_z, cfg.temporal_dk, rng));
    p.temporal_wk.push_back(xavier(cfg.d_z, cfg.temporal_dk, rng));
    p.temporal_wv.push_back(xavier(cfg.d_z, cfg.temporal_dv, rng));
  }
  p.temporal_wo = xavier(cfg.temporal_heads * cfg.temporal_dv, cfg.d_z, rng);
  p.w_out = xavier(2, cfg.d_z, rng);
  p.bias = Eigen::Vector2d::Zero();
  return p;
}

int CorrectorParams::param_count() const {
  int n = static_cast<int>(spatial_wq.size() + spatial_wk.size() + spatial_wv.size());
  for (int h = 0; h < cfg.temporal_heads; ++h) {
    n += static_cast<int>(temporal_wq[h].size() + temporal_wk[h].size() + temporal_wv[h].size());
  }
  n += static_cast<int>(temporal_wo.size() + w_out.size()) + 2;
  return n;
}

Eigen::VectorXd CorrectorParams::pack() const {
  Eigen::VectorXd theta(param_count());
  int at = 0;
  pack_matrix(theta, at, spatial_wq);
  pack_matrix(theta, at, spatial_wk);
  pack_matrix(theta, at, spatial_wv);
  for (int h = 0; h < cfg.temporal_heads; ++h) {
    pack_matrix(theta, at, temporal_wq[h]);
    pack_matrix(theta, at, temporal_wk[h]);
    pack_matrix(theta, at, temporal_wv[h]);
  }
  pack_matrix(theta, at, temporal_wo);
  pack_matrix(theta, at, w_out);
  theta(at++) = bias.x();
  theta(at++) = bias.y();
  return theta;
}

void CorrectorParams::unpack(const Eigen::VectorXd& theta) {
  require(theta.size() == param_count(), "CorrectorParams::unpack: size mismatch");
  int at = 0;
  unpack_matrix(theta, at, spatial_wq);
  unpack_matrix(theta, at, spatial_wk);
  unpack_matrix(theta, at, spatial_wv);
  for (int h = 0; h < cfg.temporal_heads; ++h) {
    unpack_matrix(theta, at, temporal_wq[h]);
    unpack_matrix(theta, at, temporal_wk[h]);
    unpack_matrix(theta, at, temporal_wv[h]);
  }
  unpack_matrix(theta, at, temporal_wo);
  unpack_matrix(theta, at, w_out);
  bias.x() = theta(at++);
  bias.y() = theta(at++);
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> spatial_attention(const Eigen::MatrixXd& epoch_features,
                                                              const CorrectorParams& params) {
  require(epoch_features.cols() == params.cfg.num_features,
          "spatial_attention: feature width mismatch");
  SdpaCache c = sdpa_forward(epoch_features * params.spatial_wq,
                             epoch_features * params.spatial_wk,
                             epoch_features * params.spatial_wv, true);
  Eigen::VectorXd received = c.attention.colwise().mean().transpose();
  return {c.output, received};
}

namespace {

struct CorrectorCache {
  std::vector<SdpaCache> spatial;   // per window slice
  Eigen::MatrixXd tokens;           // T x d_z
  std::vector<SdpaCache> temporal;  // per head
  Eigen::MatrixXd concat;           // T x h*d_v
  Eigen::MatrixXd mixed;            // T x d_z
  Eigen::VectorXd last_token;       // d_z
};

Eigen::Vector2d corrector_forward_impl(const SatFeatureWindow& window,
                                       const CorrectorParams& p, CorrectorCache& cache) {
  const auto& cfg = p.cfg;
  require(window.window_len() >= 1, "corrector: empty window");
  const int T = window.window_len();
  cache.tokens.resize(T, cfg.d_z);
  cache.spatial.clear();
  cache.spatial.reserve(T);
  for (int t = 0; t < T; ++t) {
    const Eigen::MatrixXd& X = window.epochs[t];
    require(X.cols() == cfg.num_features, "corrector: feature width mismatch");
    cache.spatial.push_back(
        sdpa_forward(X * p.spatial_wq, X * p.spatial_wk, X * p.spatial_wv, true));
    cache.tokens.row(t) = cache.spatial.back().output.colwise().mean();
  }

  cache.concat.resize(T, cfg.temporal_heads * cfg.temporal_dv);
  cache.temporal.clear();
  cache.temporal.reserve(cfg.temporal_heads);
  for (int h = 0; h < cfg.temporal_heads; ++h) {
    cache.temporal.push_back(sdpa_forward(cache.tokens * p.temporal_wq[h],
                                          cache.tokens * p.temporal_wk[h],
                                          cache.tokens * p.temporal_wv[h], true));
    cache.concat.middleCols(h * cfg.temporal_dv, cfg.temporal_dv) = cache.temporal[h].output;
  }
  cache.mixed = cache.concat * p.temporal_wo;
  cache.last_token = cache.mixed.row(T - 1).transpose();
  return p.w_out * cache.last_token + p.bias;
}

struct CorrectorGrad {
  Eigen::MatrixXd spatial_wq, spatial_wk, spatial_wv;
  std::vector<Eigen::MatrixXd> temporal_wq, temporal_wk, temporal_wv;
  Eigen::MatrixXd temporal_wo;
  Eigen::MatrixXd w_out;
  Eigen::Vector2d bias;

  explicit CorrectorGrad(const CorrectorParams& p) {
    spatial_wq = Eigen::MatrixXd::Zero(p.spatial_wq.rows(), p.spatial_wq.cols());
    spatial_wk = Eigen::MatrixXd::Zero(p.spatial_wk.rows(), p.spatial_wk.cols());
    spatial_wv = Eigen::MatrixXd::Zero(p.spatial_wv.rows(), p.spatial_wv.cols());
    for (int h = 0; h < p.cfg.temporal_heads; ++h) {
      temporal_wq.push_back(Eigen::MatrixXd::Zero(p.temporal_wq[h].rows(), p.temporal_wq[h].cols()));
      temporal_wk.push_back(Eigen::MatrixXd::Zero(p.temporal_wk[h].rows(), p.temporal_wk[h].cols()));
      temporal_wv.push_back(Eigen::MatrixXd::Zero(p.temporal_wv[h].rows(), p.temporal_wv[h].cols()));
    }
    temporal_wo = Eigen::MatrixXd::Zero(p.temporal_wo.rows(), p.temporal_wo.cols());
    w_out = Eigen::MatrixXd::Zero(p.w_out.rows(), p.w_out.cols());
    bias.setZero();
  }

  Eigen::VectorXd pack(const CorrectorParams& p) const {
    Eigen::VectorXd flat(p.param_count());
    int at = 0;
    pack_matrix(flat, at, spatial_wq);
    pack_matrix(flat, at, spatial_wk);
    pack_matrix(flat, at, spatial_wv);
    for (int h = 0; h < p.cfg.temporal_heads; ++h) {
      pack_matrix(flat, at, temporal_wq[h]);
      pack_matrix(flat, at, temporal_wk[h]);
      pack_matrix(flat, at, temporal_wv[h]);
    }
    pack_matrix(flat, at, temporal_wo);
    pack_matrix(flat, at, w_out);
    flat(at++) = bias.x();
    flat(at++) = bias.y();
    return flat;
  }
};

void corrector_backward(const SatFeatureWindow& window, const CorrectorParams& p,
                        const CorrectorCache& cache, const Eigen::Vector2d& d_out,
                        CorrectorGrad& g) {
  const auto& cfg = p.cfg;
  const int T = window.window_len();

  g.w_out += d_out * cache.last_token.transpose();
  g.bias += d_out;

  Eigen::MatrixXd d_mixed = Eigen::MatrixXd::Zero(T, cfg.d_z);
  d_mixed.row(T - 1) = (p.w_out.transpose() * d_out).transpose();

  g.temporal_wo += cache.concat.transpose() * d_mixed;
  Eigen::MatrixXd d_concat = d_mixed * p.temporal_wo.transpose();

  Eigen::MatrixXd d_tokens = Eigen::MatrixXd::Zero(T, cfg.d_z);
  for (int h = 0; h < cfg.temporal_heads; ++h) {
    SdpaGrads sg = sdpa_backward(cache.temporal[h],
                                 d_concat.middleCols(h * cfg.temporal_dv, cfg.temporal_dv));
    g.temporal_wq[h] += cache.tokens.transpose() * sg.dQ;
    g.temporal_wk[h] += cache.tokens.transpose() * sg.dK;
    g.temporal_wv[h] += cache.tokens.transpose() * sg.dV;
    d_tokens += sg.dQ * p.temporal_wq[h].transpose();
    d_tokens += sg.dK * p.temporal_wk[h].transpose();
    d_tokens += sg.dV * p.temporal_wv[h].transpose();
  }

  for (int t = 0; t < T; ++t) {
    const Eigen::MatrixXd& X = window.epochs[t];
    const int K = static_cast<int>(X.rows());
    // token = column mean of the spatial output.
    Eigen::MatrixXd dZ = Eigen::VectorXd::Constant(K, 1.0 / K) * d_tokens.row(t);
    SdpaGrads sg = sdpa_backward(cache.spatial[t], dZ);
    g.spatial_wq += X.transpose() * sg.dQ;
    g.spatial_wk += X.transpose() * sg.dK;
    g.spatial_wv += X.transpose() * sg.dV;
  }
}

}  // namespace

Eigen::Vector2d corrector_forward(const SatFeatureWindow& window, const CorrectorParams& params) {
  CorrectorCache cache;
  return corrector_forward_impl(window, params, cache);
}

double corrector_loss_grad(const SatFeatureWindow& window, const Eigen::Vector2d& target,
                           const CorrectorParams& params, Eigen::VectorXd& grad) {
  CorrectorCache cache;
  Eigen::Vector2d out = corrector_forward_impl(window, params, cache);
  Eigen::Vector2d err = out - target;
  CorrectorGrad g(params);
  corrector_backward(window, params, cache, 2.0 * err, g);
  grad = g.pack(params);
  return err.squaredNorm();
}

CorrectorTrainResult corrector_train(const std::vector<SatFeatureWindow>& windows,
                                     const std::vector<Eigen::Vector2d>& gps_fixes,
                                     const std::vector<Eigen::Vector2d>& truth,
                                     const CorrectorTrainConfig& cfg) {
  require(!windows.empty(), "corrector_train: empty dataset");
  require(windows.size() == gps_fixes.size() && windows.size() == truth.size(),
          "corrector_train: dataset size mismatch");

  Rng rng(cfg.seed);
  CorrectorTrainResult out;
  out.params = CorrectorParams::init(cfg.arch, rng);
  Eigen::VectorXd theta = out.params.pack();
  AdamOptimizer opt(static_cast<int>(theta.size()), cfg.learning_rate);

  const int n = static_cast<int>(windows.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Eigen::VectorXd grad_total = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd g;
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      Eigen::Vector2d target = truth[i] - gps_fixes[i];
      loss += corrector_loss_grad(windows[i], target, out.params, g);
      grad_total += g / n;
    }
    loss /= n;
    out.loss_curve.push_back(loss);
    if (!std::isfinite(loss) || loss > 1e6) {
      throw NumericalError("corrector_train: diverged at epoch " + std::to_string(epoch));
    }
    clip_gradient(grad_total, cfg.clip_norm);
    opt.step(theta, grad_total);
    out.params.unpack(theta);
  }
  return out;
}

// --- EKF ----------------------------------------------------------------------

EkfRunResult ekf_run(const std::vector<Eigen::Vector2d>& controls,
                     const std::vector<std::optional<Eigen::Vector2d>>& observations,
                     const EkfState& init, const EkfNoise& noise, double dt) {
  require(dt > 0.0, "ekf_run: dt must be positive");
  require(noise.accel_psd >= 0.0, "ekf_run: negative process noise");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> rchk(noise.meas_cov);
  require(rchk.eigenvalues().minCoeff() >= 0.0, "ekf_run: measurement covariance not PSD");
  require(controls.empty() || controls.size() == observations.size(),
          "ekf_run: control/observation length mismatch");

  Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
  F(0, 2) = dt;
  F(1, 3) = dt;
  Eigen::Matrix<double, 4, 2> B;
  B << 0.5 * dt * dt, 0, 0, 0.5 * dt * dt, dt, 0, 0, dt;
  // White-acceleration process noise for a constant-velocity model.
  Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
  double q = noise.accel_psd;
  double dt2 = dt * dt, dt3 = dt2 * dt;
  Q(0, 0) = Q(1, 1) = q * dt3 / 3.0;
  Q(0, 2) = Q(2, 0) = Q(1, 3) = Q(3, 1) = q * dt2 / 2.0;
  Q(2, 2) = Q(3, 3) = q * dt;
  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = H(1, 1) = 1.0;

  EkfRunResult out;
  out.states.reserve(observations.size());
  out.innovations.reserve(observations.size());
  EkfState s = init;
  for (std::size_t k = 0; k < observations.size(); ++k) {
    // Predict.
    s.x = F * s.x;
    if (!controls.empty()) s.x += B * controls[k];
    s.P = F * s.P * F.transpose() + Q;

    // Update.
    if (observations[k]) {
      Eigen::Vector2d innov = *observations[k] - H * s.x;
      Eigen::Matrix2d S = H * s.P * H.transpose() + noise.meas_cov;
      Eigen::Matrix<double, 4, 2> K = s.P * H.transpose() * S.inverse();
      s.x += K * innov;
      Eigen::Matrix4d IKH = Eigen::Matrix4d::Identity() - K * H;
      s.P = IKH * s.P * IKH.transpose() + K * noise.meas_cov * K.transpose();
      out.innovations.push_back(innov);
    } else {
      out.innovations.push_back(std::nullopt);
    }
    s.P = 0.5 * (s.P + s.P.transpose()).eval();
    out.states.push_back(s);
  }
  return out;
}

}  // namespace speccart
