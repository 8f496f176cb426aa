#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "speccart/nn.hpp"
#include "speccart/rng.hpp"

namespace speccart {

// --- Kernel trajectory smoothing --------------------------------------------

/// Row-stochastic Gaussian time-kernel weights K_ij = exp(-(t_i-t_j)^2/2s^2),
/// normalized per row.
Eigen::MatrixXd nw_time_weights(const std::vector<double>& times, double sigma);

/// NW-attention smoother: row i of the weight matrix aggregates the
/// hypotheses. Each output is a convex combination of the inputs.
std::vector<Eigen::Vector2d> nw_traj_smooth(const std::vector<double>& times,
                                            const std::vector<Eigen::Vector2d>& hypotheses,
                                            double sigma);

/// Centered moving average with edge truncation; window must be odd.
std::vector<Eigen::Vector2d> moving_average(const std::vector<Eigen::Vector2d>& hypotheses,
                                            int window);

/// Mean squared norm of discrete second differences (lower = smoother).
double smoothness_metric(const std::vector<Eigen::Vector2d>& traj);

// --- Error statistics --------------------------------------------------------

struct ErrorReport {
  double mean = 0.0;
  double p90 = 0.0;
  double max = 0.0;
  std::vector<std::pair<double, double>> cdf;  // (error, fraction <= error)
};

/// Linear-interpolated quantile of an unsorted sample.
double quantile(std::vector<double> values, double q);

ErrorReport error_report(const std::vector<Eigen::Vector2d>& estimates,
                         const std::vector<Eigen::Vector2d>& truth);

// --- Attention corrector ------------------------------------------------------

/// Sliding window of per-satellite features, shape T x K x 4 with feature
/// order (snr, elevation proxy, residual magnitude, signed residual).
struct SatFeatureWindow {
  std::vector<Eigen::MatrixXd> epochs;  // T matrices of K x 4
  int end_epoch = 0;

  int window_len() const { return static_cast<int>(epochs.size()); }
  int num_sats() const { return epochs.empty() ? 0 : static_cast<int>(epochs.front().rows()); }
};

struct CorrectorConfig {
  int window = 10;        // T
  int num_features = 4;   // d_f
  int spatial_dk = 8;
  int d_z = 16;           // pooled token width (= spatial d_v)
  int temporal_heads = 2;
  int temporal_dk = 8;
  int temporal_dv = 8;
};

/// Spatial self-attention over satellites, mean pooling, multi-head temporal
/// attention over the window, affine head on the last token.
struct CorrectorParams {
  CorrectorConfig cfg;
  Eigen::MatrixXd spatial_wq, spatial_wk;  // d_f x spatial_dk
  Eigen::MatrixXd spatial_wv;              // d_f x d_z
  std::vector<Eigen::MatrixXd> temporal_wq, temporal_wk;  // d_z x temporal_dk
  std::vector<Eigen::MatrixXd> temporal_wv;               // d_z x temporal_dv
  Eigen::MatrixXd temporal_wo;  // heads*temporal_dv x d_z
  Eigen::MatrixXd w_out;        // 2 x d_z
  Eigen::Vector2d bias;

  static CorrectorParams init(const CorrectorConfig& cfg, Rng& rng);

  int param_count() const;
  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd& theta);
};

/// Self-attention across satellites for one epoch. Returns the K x d_z
/// reliability-weighted representations and the per-satellite mean received
/// attention (column means of the attention matrix), which is what the
/// heatmap plots.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> spatial_attention(const Eigen::MatrixXd& epoch_features,
                                                              const CorrectorParams& params);

/// Predicted correction for the window's last epoch.
Eigen::Vector2d corrector_forward(const SatFeatureWindow& window, const CorrectorParams& params);

/// Loss |dr - target|^2 for one window; accumulates d(loss)/d(theta) into
/// grad (flat, aligned with pack()).
double corrector_loss_grad(const SatFeatureWindow& window, const Eigen::Vector2d& target,
                           const CorrectorParams& params, Eigen::VectorXd& grad);

struct CorrectorTrainConfig {
  double learning_rate = 0.02;
  int epochs = 150;
  std::uint64_t seed = 1;
  double clip_norm = 10.0;
  CorrectorConfig arch;
};

struct CorrectorTrainResult {
  CorrectorParams params;
  std::vector<double> loss_curve;  // mean per-window loss per epoch
};

/// Full-batch Adam on the supervised correction loss
/// sum_t |r_gps + dr(G_t) - r_gt|^2. Deterministic per seed.
CorrectorTrainResult corrector_train(const std::vector<SatFeatureWindow>& windows,
                                     const std::vector<Eigen::Vector2d>& gps_fixes,
                                     const std::vector<Eigen::Vector2d>& truth,
                                     const CorrectorTrainConfig& cfg);

// --- Extended Kalman filter ----------------------------------------------------

/// Planar constant-velocity state (px, py, vx, vy).
struct EkfState {
  Eigen::Vector4d x = Eigen::Vector4d::Zero();
  Eigen::Matrix4d P = Eigen::Matrix4d::Identity();
};

struct EkfNoise {
  double accel_psd = 1.0;    // white-acceleration process noise density
  Eigen::Matrix2d meas_cov = Eigen::Matrix2d::Identity();
};

struct EkfRunResult {
  std::vector<EkfState> states;                 // one per step, post-update
  std::vector<std::optional<Eigen::Vector2d>> innovations;
};

/// Predict/update over a fixed-rate sequence. controls holds optional
/// accelerations (may be empty for pure constant velocity); observations are
/// optional per step (missing = dead reckoning). Covariances are kept
/// symmetric with a Joseph-form update plus explicit symmetrization.
EkfRunResult ekf_run(const std::vector<Eigen::Vector2d>& controls,
                     const std::vector<std::optional<Eigen::Vector2d>>& observations,
                     const EkfState& init, const EkfNoise& noise, double dt);

}  // namespace speccart
