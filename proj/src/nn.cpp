#include "speccart/nn.hpp"

#include <cmath>

#include "speccart/attention.hpp"
#include "speccart/common.hpp"

namespace speccart {

SdpaCache sdpa_forward(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& K,
                       const Eigen::MatrixXd& V, bool scale_scores) {
  SdpaCache c;
  c.Q = Q;
  c.K = K;
  c.V = V;
  c.scale = scale_scores ? 1.0 / std::sqrt(static_cast<double>(Q.cols())) : 1.0;
  Eigen::MatrixXd scores = c.scale * (Q * K.transpose());
  c.attention = softmax_rows(scores);
  c.output = c.attention * V;
  return c;
}

SdpaGrads sdpa_backward(const SdpaCache& cache, const Eigen::MatrixXd& d_output) {
  SdpaGrads g;
  const Eigen::MatrixXd& A = cache.attention;
  Eigen::MatrixXd dA = d_output * cache.V.transpose();
  g.dV = A.transpose() * d_output;

  Eigen::MatrixXd dS(A.rows(), A.cols());
  for (int i = 0; i < A.rows(); ++i) {
    double dot = A.row(i).dot(dA.row(i));
    dS.row(i) = A.row(i).array() * (dA.row(i).array() - dot);
  }
  dS *= cache.scale;
  g.dQ = dS * cache.K;
  g.dK = dS.transpose() * cache.Q;
  return g;
}

Eigen::VectorXd softmax_backward(const Eigen::VectorXd& alpha, const Eigen::VectorXd& d_alpha) {
  double dot = alpha.dot(d_alpha);
  return (alpha.array() * (d_alpha.array() - dot)).matrix();
}

Mlp Mlp::init(int in_dim, int hidden, Rng& rng) {
  Mlp m;
  double s1 = std::sqrt(6.0 / (in_dim + hidden));
  double s2 = std::sqrt(6.0 / (hidden + 1));
  m.W1.resize(hidden, in_dim);
  for (int i = 0; i < hidden; ++i)
    for (int j = 0; j < in_dim; ++j) m.W1(i, j) = rng.uniform(-s1, s1);
  m.b1 = Eigen::VectorXd::Zero(hidden);
  m.w2.resize(hidden);
  for (int i = 0; i < hidden; ++i) m.w2(i) = rng.uniform(-s2, s2);
  m.b2 = 0.0;
  return m;
}

int Mlp::param_count() const {
  return static_cast<int>(W1.size() + b1.size() + w2.size()) + 1;
}

double Mlp::forward(const Eigen::VectorXd& x) const {
  Eigen::VectorXd h;
  return forward_cached(x, h);
}

double Mlp::forward_cached(const Eigen::VectorXd& x, Eigen::VectorXd& hidden) const {
  hidden = ((W1 * x + b1).array().tanh()).matrix();
  return w2.dot(hidden) + b2;
}

Mlp::Grad Mlp::zero_grad() const {
  Grad g;
  g.dW1 = Eigen::MatrixXd::Zero(W1.rows(), W1.cols());
  g.db1 = Eigen::VectorXd::Zero(b1.size());
  g.dw2 = Eigen::VectorXd::Zero(w2.size());
  g.db2 = 0.0;
  return g;
}

void Mlp::backward(const Eigen::VectorXd& x, const Eigen::VectorXd& hidden, double d_out,
                   Grad& grad, Eigen::VectorXd* d_x) const {
  grad.dw2 += d_out * hidden;
  grad.db2 += d_out;
  // d pre-activation = d_out * w2 .* (1 - h^2)
  Eigen::VectorXd dz = d_out * w2.cwiseProduct((1.0 - hidden.array().square()).matrix());
  grad.dW1 += dz * x.transpose();
  grad.db1 += dz;
  if (d_x) *d_x = W1.transpose() * dz;
}

Eigen::VectorXd Mlp::pack() const {
  Eigen::VectorXd theta(param_count());
  int at = 0;
  theta.segment(at, W1.size()) = Eigen::Map<const Eigen::VectorXd>(W1.data(), W1.size());
  at += static_cast<int>(W1.size());
  theta.segment(at, b1.size()) = b1;
  at += static_cast<int>(b1.size());
  theta.segment(at, w2.size()) = w2;
  at += static_cast<int>(w2.size());
  theta(at) = b2;
  return theta;
}

void Mlp::unpack(const Eigen::VectorXd& theta) {
  require(theta.size() == param_count(), "Mlp::unpack: size mismatch");
  int at = 0;
  Eigen::Map<Eigen::VectorXd>(W1.data(), W1.size()) = theta.segment(at, W1.size());
  at += static_cast<int>(W1.size());
  b1 = theta.segment(at, b1.size());
  at += static_cast<int>(b1.size());
  w2 = theta.segment(at, w2.size());
  at += static_cast<int>(w2.size());
  b2 = theta(at);
}

Eigen::VectorXd Mlp::pack_grad(const Grad& g) {
  Eigen::VectorXd flat(g.dW1.size() + g.db1.size() + g.dw2.size() + 1);
  int at = 0;
  flat.segment(at, g.dW1.size()) = Eigen::Map<const Eigen::VectorXd>(g.dW1.data(), g.dW1.size());
  at += static_cast<int>(g.dW1.size());
  flat.segment(at, g.db1.size()) = g.db1;
  at += static_cast<int>(g.db1.size());
  flat.segment(at, g.dw2.size()) = g.dw2;
  at += static_cast<int>(g.dw2.size());
  flat(at) = g.db2;
  return flat;
}

AdamOptimizer::AdamOptimizer(int dim, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_ = Eigen::VectorXd::Zero(dim);
  v_ = Eigen::VectorXd::Zero(dim);
}

void AdamOptimizer::step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  theta -= (lr_ / bc1) * m_.cwiseQuotient(((v_ / bc2).cwiseSqrt().array() + eps_).matrix());
}

void clip_gradient(Eigen::VectorXd& grad, double max_norm) {
  double n = grad.norm();
  if (n > max_norm && n > 0.0) grad *= max_norm / n;
}

}  // namespace speccart
