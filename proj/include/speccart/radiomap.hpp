#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "speccart/attention.hpp"
#include "speccart/nn.hpp"
#include "speccart/rng.hpp"

namespace speccart {

/// Sparse geo-tagged observations of a scalar field.
struct SampleSet {
  Eigen::MatrixX2d locations;
  Eigen::VectorXd values;
  Eigen::VectorXd reliability;  // optional, may be empty

  int size() const { return static_cast<int>(locations.rows()); }
  void validate() const;
};

/// Regular 2-d grid of field values; node (ix, iy) sits at the cell center.
struct RadioMapGrid {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  int nx = 2, ny = 2;
  Eigen::MatrixXd values;  // nx x ny, values(ix, iy)

  double cell_x(int ix) const { return x0 + (ix + 0.5) * (x1 - x0) / nx; }
  double cell_y(int iy) const { return y0 + (iy + 0.5) * (y1 - y0) / ny; }
  void validate() const;
};

/// Normalized inverse-distance weights w_i = |q - x_i|^-p. An exact hit
/// (within 1e-9 m) returns a one-hot weight on that sample.
WeightVector idw_weights(const Eigen::Vector2d& query, const SampleSet& samples, double exponent);

/// Inverse-distance-weighted estimate.
double idw(const Eigen::Vector2d& query, const SampleSet& samples, double exponent);

/// Median-deviation reweighting: omega_i = base_i * exp(-beta |y_i - med(y)|),
/// renormalized. Median of an even-length vector is the mean of the two
/// middle order statistics.
WeightVector reliability_weights(const WeightVector& base, const Eigen::VectorXd& values,
                                 double beta);

/// Bisection on [lo, hi] for the beta that gives weight target_weight to
/// sample `index` after reliability reweighting. The post-normalization
/// weight of the largest-deviation sample is monotone in beta.
double solve_reliability_beta(const WeightVector& base, const Eigen::VectorXd& values, int index,
                              double target_weight, double lo = 0.0, double hi = 5.0);

/// Gaussian-kernel NW interpolation; delegates to the attention module so
/// both paths share one kernel implementation.
double nw_interp(const Eigen::Vector2d& query, const SampleSet& samples, double bandwidth);

struct KrigingResult {
  double estimate = 0.0;
  double variance = 0.0;
};

/// Simple kriging with a squared-exponential covariance
/// c(a,b) = variance * exp(-|a-b|^2 / (2 l^2)) and constant mean:
///   est = mu + k0^T (K + noise I)^-1 (y - mu).
KrigingResult kriging(const Eigen::Vector2d& query, const SampleSet& samples, double mean,
                      double variance, double lengthscale, double noise_var);

// --- Synthetic field --------------------------------------------------------

struct GaussianBump {
  Eigen::Vector2d center;
  double amplitude = 1.0;
  double width = 0.1;
};

/// Sum of Gaussian bumps plus a linear trend.
struct FieldSpec {
  std::vector<GaussianBump> bumps;
  double trend_offset = 0.0;
  double trend_x = 0.0;
  double trend_y = 0.0;

  double eval(const Eigen::Vector2d& p) const;
};

RadioMapGrid gen_field(const FieldSpec& spec, double x0, double x1, double y0, double y1, int nx,
                       int ny);

RadioMapGrid eval_on_grid(double x0, double x1, double y0, double y1, int nx, int ny,
                          const std::function<double(const Eigen::Vector2d&)>& f);

// --- Learnable attention reconstructor --------------------------------------

/// Query-conditioned aggregation: score e_i = a_theta([q, x_i, y_i]),
/// alpha = softmax(e), prediction = f_theta([q, sum_i alpha_i y_i]).
struct AttnRemModel {
  Mlp scorer;     // 5 -> hidden -> 1
  Mlp predictor;  // 3 -> hidden -> 1

  static AttnRemModel init(int scorer_hidden, int predictor_hidden, Rng& rng);

  int param_count() const { return scorer.param_count() + predictor.param_count(); }
  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd& theta);

  double predict(const Eigen::Vector2d& query, const SampleSet& samples) const;

  /// Prediction plus d(prediction)/d(theta) as a flat vector aligned with
  /// pack(). Verified against central differences in the tests.
  double predict_grad(const Eigen::Vector2d& query, const SampleSet& samples,
                      Eigen::VectorXd& grad) const;
};

struct RemTrainConfig {
  double learning_rate = 0.05;
  int epochs = 1500;
  std::uint64_t seed = 1;
  double clip_norm = 10.0;
  int scorer_hidden = 32;
  int predictor_hidden = 16;
};

struct RemTrainResult {
  AttnRemModel model;
  std::vector<double> loss_curve;  // one MSE entry per epoch, epoch 0 first
};

/// Full-batch gradient descent with a fixed step and gradient-norm clipping.
/// Deterministic given the seed. Throws NumericalError when the loss blows
/// past 1e6.
RemTrainResult attn_rem_train(const SampleSet& samples, const Eigen::MatrixX2d& queries,
                              const Eigen::VectorXd& targets, const RemTrainConfig& cfg);

struct RemMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  double maxae = 0.0;
  std::optional<double> r2;  // unset when the truth field is constant
};

RemMetrics rem_metrics(const RadioMapGrid& pred, const RadioMapGrid& truth);

/// Median with the even-length convention used by reliability_weights.
double median(Eigen::VectorXd v);

}  // namespace speccart
