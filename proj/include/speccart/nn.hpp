#pragma once

#include <Eigen/Dense>
#include <functional>

#include "speccart/rng.hpp"

namespace speccart {

// Differentiable building blocks for the trainable fusion models. Gradients
// are hand-derived and verified against central finite differences in the
// test suite; keep forward and backward in sync when touching these.

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct SdpaCache {
  Eigen::MatrixXd Q, K, V;
  Eigen::MatrixXd attention;  // n x m, rows sum to 1
  Eigen::MatrixXd output;     // n x d_v
  double scale = 1.0;
};

SdpaCache sdpa_forward(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& K,
                       const Eigen::MatrixXd& V, bool scale_scores);

struct SdpaGrads {
  Eigen::MatrixXd dQ, dK, dV;
};

SdpaGrads sdpa_backward(const SdpaCache& cache, const Eigen::MatrixXd& d_output);

/// Softmax backward for one row: given alpha = softmax(s) and dL/dalpha,
/// returns dL/ds.
Eigen::VectorXd softmax_backward(const Eigen::VectorXd& alpha, const Eigen::VectorXd& d_alpha);

/// One-hidden-layer tanh perceptron with scalar output:
///   f(x) = w2 . tanh(W1 x + b1) + b2
struct Mlp {
  Eigen::MatrixXd W1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;

  static Mlp init(int in_dim, int hidden, Rng& rng);

  int in_dim() const { return static_cast<int>(W1.cols()); }
  int hidden_dim() const { return static_cast<int>(W1.rows()); }
  int param_count() const;

  double forward(const Eigen::VectorXd& x) const;
  /// Forward pass that keeps the hidden activations for backward.
  double forward_cached(const Eigen::VectorXd& x, Eigen::VectorXd& hidden) const;

  struct Grad {
    Eigen::MatrixXd dW1;
    Eigen::VectorXd db1;
    Eigen::VectorXd dw2;
    double db2 = 0.0;
  };
  Grad zero_grad() const;

  /// Accumulates parameter grads for upstream sensitivity d_out; optionally
  /// returns dL/dx.
  void backward(const Eigen::VectorXd& x, const Eigen::VectorXd& hidden, double d_out, Grad& grad,
                Eigen::VectorXd* d_x = nullptr) const;

  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd& theta);
  static Eigen::VectorXd pack_grad(const Grad& g);
};

/// Full-batch Adam on a flat parameter vector.
class AdamOptimizer {
 public:
  AdamOptimizer(int dim, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  Eigen::VectorXd m_, v_;
};

/// Rescales grad in place so its 2-norm is at most max_norm.
void clip_gradient(Eigen::VectorXd& grad, double max_norm);

}  // namespace speccart
