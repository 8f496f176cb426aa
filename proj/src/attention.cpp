#include "speccart/attention.hpp"

#include <cmath>

#include "speccart/common.hpp"
#include "speccart/nn.hpp"

namespace speccart {

std::string to_string(WeightProvenance p) {
  switch (p) {
    case WeightProvenance::kNwKernel: return "nw_kernel";
    case WeightProvenance::kSoftmax: return "softmax";
    case WeightProvenance::kGated: return "gated";
    case WeightProvenance::kReliability: return "reliability";
    case WeightProvenance::kUniform: return "uniform";
    case WeightProvenance::kIdw: return "idw";
  }
  return "unknown";
}

void WeightVector::validate() const {
  require(w.size() > 0, "weights: empty");
  require((w.array() >= 0.0).all(), "weights: negative entry");
  require(std::abs(w.sum() - 1.0) <= 1e-9, "weights: not normalized");
}

Eigen::VectorXd softmax(const Eigen::VectorXd& scores) {
  Eigen::VectorXd e = (scores.array() - scores.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (int i = 0; i < scores.rows(); ++i) {
    out.row(i) = softmax(scores.row(i).transpose()).transpose();
  }
  return out;
}

WeightVector nw_weights(const Eigen::VectorXd& query, const std::vector<Eigen::VectorXd>& keys,
                        double bandwidth) {
  require(bandwidth > 0.0, "nw_weights: bandwidth must be positive");
  require(!keys.empty(), "nw_weights: no keys");
  Eigen::VectorXd log_kernel(static_cast<int>(keys.size()));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    require(keys[i].size() == query.size(), "nw_weights: key dimension mismatch");
    double d2 = (query - keys[i]).squaredNorm();
    log_kernel(static_cast<int>(i)) = -d2 / (2.0 * bandwidth * bandwidth);
  }
  WeightVector wv;
  wv.w = softmax(log_kernel);  // max-shift keeps the all-underflow case finite
  wv.provenance = WeightProvenance::kNwKernel;
  return wv;
}

double nw_estimate(const Eigen::VectorXd& query, const std::vector<Eigen::VectorXd>& keys,
                   const Eigen::VectorXd& values, double bandwidth) {
  require(static_cast<int>(keys.size()) == values.size(), "nw_estimate: key/value count mismatch");
  WeightVector wv = nw_weights(query, keys, bandwidth);
  return wv.w.dot(values);
}

Eigen::MatrixXd sdpa(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& K, const Eigen::MatrixXd& V,
                     bool scale_scores, Eigen::MatrixXd* attention_out) {
  require(Q.cols() == K.cols(), "sdpa: query/key dimension mismatch");
  require(K.rows() == V.rows(), "sdpa: key/value count mismatch");
  SdpaCache cache = sdpa_forward(Q, K, V, scale_scores);
  if (attention_out) *attention_out = cache.attention;
  return cache.output;
}

void MultiHeadParams::validate(int d_model) const {
  require(heads >= 1, "multi_head: need at least one head");
  require(static_cast<int>(w_query.size()) == heads && static_cast<int>(w_key.size()) == heads &&
              static_cast<int>(w_value.size()) == heads,
          "multi_head: per-head projection count mismatch");
  int dv_total = 0;
  for (int h = 0; h < heads; ++h) {
    require(w_query[h].rows() == d_model && w_key[h].rows() == d_model &&
                w_value[h].rows() == d_model,
            "multi_head: projection rows must equal d_model");
    require(w_query[h].cols() == w_key[h].cols(), "multi_head: d_k mismatch within head");
    dv_total += static_cast<int>(w_value[h].cols());
    if (w_gate) {
      require(w_gate->rows() == d_model && w_gate->cols() == w_value[h].cols(),
              "multi_head: gate shape mismatch");
    }
  }
  require(w_out.rows() == dv_total, "multi_head: W_O rows must equal h*d_v");
}

Eigen::MatrixXd multi_head(const Eigen::MatrixXd& X, const MultiHeadParams& params) {
  params.validate(static_cast<int>(X.cols()));
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd concat(n, params.w_out.rows());
  int col = 0;
  for (int h = 0; h < params.heads; ++h) {
    Eigen::MatrixXd Q = X * params.w_query[h];
    Eigen::MatrixXd K = X * params.w_key[h];
    Eigen::MatrixXd V = X * params.w_value[h];
    Eigen::MatrixXd head = sdpa(Q, K, V, true);
    if (params.w_gate) head = gated(head, X, *params.w_gate);
    concat.middleCols(col, head.cols()) = head;
    col += static_cast<int>(head.cols());
  }
  return concat * params.w_out;
}

Eigen::MatrixXd gated(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X,
                      const Eigen::MatrixXd& w_theta) {
  require(X.cols() == w_theta.rows(), "gated: gate matrix rows must match X columns");
  require(Y.rows() == X.rows() && Y.cols() == w_theta.cols(), "gated: output shape mismatch");
  Eigen::MatrixXd logits = X * w_theta;
  Eigen::MatrixXd gate = logits.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  return Y.cwiseProduct(gate);
}

double gated_fuse(const WeightVector& alpha, const Eigen::VectorXd& gates,
                  const Eigen::VectorXd& values, bool renormalize) {
  alpha.validate();
  require(alpha.w.size() == gates.size() && gates.size() == values.size(),
          "gated_fuse: size mismatch");
  require((gates.array() > 0.0).all() && (gates.array() < 1.0).all(),
          "gated_fuse: gates must lie in (0,1)");
  Eigen::VectorXd ag = alpha.w.cwiseProduct(gates);
  if (!renormalize) return ag.dot(values);
  double mass = ag.sum();
  require(mass > 0.0, "gated_fuse: gated mass vanished under renormalization");
  return ag.dot(values) / mass;
}

}  // namespace speccart
