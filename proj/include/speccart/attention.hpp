#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace speccart {

enum class WeightProvenance { kNwKernel, kSoftmax, kGated, kReliability, kUniform, kIdw };

std::string to_string(WeightProvenance p);

/// Nonnegative weights summing to one, tagged with how they were produced.
struct WeightVector {
  Eigen::VectorXd w;
  WeightProvenance provenance = WeightProvenance::kUniform;

  /// Throws ValidationError unless w >= 0 and sum(w) = 1 +- 1e-9.
  void validate() const;
};

/// Numerically stable softmax (max-subtracted).
Eigen::VectorXd softmax(const Eigen::VectorXd& scores);

/// Row-wise stable softmax.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores);

/// Gaussian-kernel weights k(q,x_i) = exp(-|q-x_i|^2 / 2 sigma^2), normalized.
/// Evaluated in the log domain so far-away keys underflow gracefully.
WeightVector nw_weights(const Eigen::VectorXd& query, const std::vector<Eigen::VectorXd>& keys,
                        double bandwidth);

/// Nadaraya-Watson estimate: sum_i alpha_i y_i under nw_weights.
double nw_estimate(const Eigen::VectorXd& query, const std::vector<Eigen::VectorXd>& keys,
                   const Eigen::VectorXd& values, double bandwidth);

/// Scaled dot-product attention softmax(Q K^T / sqrt(d_k)) V.
/// scale_scores=false reproduces the unscaled worked examples.
/// attention_out, when given, receives the n x m weight matrix.
Eigen::MatrixXd sdpa(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& K, const Eigen::MatrixXd& V,
                     bool scale_scores = true, Eigen::MatrixXd* attention_out = nullptr);

/// Per-head projections plus output projection; optional gate matrix applies
/// gated attention to each head output before concatenation.
struct MultiHeadParams {
  int heads = 1;
  std::vector<Eigen::MatrixXd> w_query;  // d_model x d_k
  std::vector<Eigen::MatrixXd> w_key;    // d_model x d_k
  std::vector<Eigen::MatrixXd> w_value;  // d_model x d_v
  Eigen::MatrixXd w_out;                 // h*d_v x d_model
  std::optional<Eigen::MatrixXd> w_gate; // d_model x d_v

  void validate(int d_model) const;
};

/// Multi-head self-attention: Concat(head_1..head_h) W_O.
Eigen::MatrixXd multi_head(const Eigen::MatrixXd& X, const MultiHeadParams& params);

/// Gated modulation Y' = Y .*. sigmoid(X W_theta).
Eigen::MatrixXd gated(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X,
                      const Eigen::MatrixXd& w_theta);

/// Scalar gated fusion sum_i alpha_i g_i v_i. With renormalize (default) the
/// products alpha_i g_i are rescaled to sum to one so the output stays a
/// convex combination; the raw mode keeps the paper's un-normalized form.
double gated_fuse(const WeightVector& alpha, const Eigen::VectorXd& gates,
                  const Eigen::VectorXd& values, bool renormalize = true);

}  // namespace speccart
