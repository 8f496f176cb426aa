#pragma once

#include <Eigen/Dense>
#include <vector>

namespace speccart {

/// Parallel Gaussian channels with a transmit budget P and (for the
/// adversarial game) an interference budget N.
struct ChannelSet {
  Eigen::VectorXd beta;   // gains > 0
  Eigen::VectorXd sigma;  // noise powers > 0
  double total_power = 1.0;         // P
  double total_interference = 0.0;  // N

  int size() const { return static_cast<int>(beta.size()); }
  void validate() const;
};

struct AllocationResult {
  Eigen::VectorXd p;           // transmit powers
  Eigen::VectorXd n;           // interference powers (zero outside the game)
  double nu = 0.0;             // transmit water level
  double mu = 0.0;             // interference water level (game only)
  std::vector<int> active_set; // channels with p > 0
  double kkt_residual = 0.0;
  double capacity_nats = 0.0;
  bool converged = true;
  int rounds = 0;

  double capacity_bits() const;
};

/// Exact water-filling p_i = max(nu - sigma_i/beta_i, 0) via sorted
/// breakpoints; the budget is met to machine precision, no iteration.
AllocationResult waterfill(const Eigen::VectorXd& beta, const Eigen::VectorXd& sigma_eff,
                           double total_power);

struct AdversaryResult {
  Eigen::VectorXd n;
  double mu = 0.0;             // common gradient over active channels
  double kkt_residual = 0.0;
  bool converged = true;
  int iters = 0;
};

/// Best interference response: minimize sum log(1 + beta_i p_i/(sigma_i+n_i))
/// over the simplex {n >= 0, 1^T n = N}. Projected gradient descent with
/// Armijo backtracking; the objective is convex in n.
AdversaryResult adversary_response(const Eigen::VectorXd& p, const Eigen::VectorXd& beta,
                                   const Eigen::VectorXd& sigma, double total_interference,
                                   int max_iters = 2000, double kkt_tol = 1e-8);

/// Alternating best responses for max_p min_n sum log(1 + beta p/(sigma+n)),
/// with 0.5 damping on the interference update when straight alternation
/// oscillates. Returns converged=false (with the last iterates) instead of
/// throwing when max_rounds is exhausted.
AllocationResult minimax_waterfill(const ChannelSet& channels, int max_rounds = 200,
                                   double tol = 1e-9);

/// Argmax beam, ties broken by lowest index. Zero-based.
int beam_switch(const Eigen::VectorXd& rates);

struct BeamHopResult {
  Eigen::MatrixXi schedule;  // T x B binary
  double objective = 0.0;
};

/// Slot-separable beam-hopping schedule: per slot the top-Bmax beams by rate
/// (ties by lowest beam index). Exactly optimal since slots decouple.
BeamHopResult beam_hop(const Eigen::MatrixXd& rates, int bmax);

/// Euclidean projection onto {x >= 0, 1^T x = total}.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double total);

/// sum log(1 + beta_i p_i / (sigma_i + n_i)).
double game_capacity(const Eigen::VectorXd& p, const Eigen::VectorXd& n,
                     const Eigen::VectorXd& beta, const Eigen::VectorXd& sigma);

}  // namespace speccart
