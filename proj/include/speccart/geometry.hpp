#pragma once

#include <Eigen/Dense>
#include <vector>

namespace speccart {

struct SatState {
  Eigen::VectorXd pos;  // m
  Eigen::VectorXd vel;  // m/s; may be empty when only ranging is used
};

/// User state hypothesis plus the satellite constellation at one epoch.
/// Positions are planar (2-d) or ECEF (3-d); all vectors share one dimension.
struct GeometrySnapshot {
  Eigen::VectorXd user_pos;
  Eigen::VectorXd user_vel;  // empty when unused
  std::vector<SatState> sats;

  int dim() const { return static_cast<int>(user_pos.size()); }
  bool has_velocity() const { return user_vel.size() > 0; }

  /// Throws ValidationError on dimension mismatch or a satellite coincident
  /// with the user.
  void validate() const;
};

/// Geometry-driven information summary for one measurement set.
struct FisherReport {
  Eigen::MatrixXd info;          // J, 1/m^2
  Eigen::MatrixXd crlb;          // pseudo-inverse of J on the observable subspace, m^2
  int rank = 0;
  double condition_number = 0.0;  // infinity when rank-deficient
  std::vector<Eigen::VectorXd> unobservable_dirs;  // unit vectors spanning null(J)

  bool fully_observable() const { return unobservable_dirs.empty(); }
};

/// Unit vector from satellite toward the user: (p - s)/|p - s|.
Eigen::VectorXd los_unit(const Eigen::VectorXd& user_pos, const Eigen::VectorXd& sat_pos);

/// Range-measurement Jacobian; row i is the LOS unit vector of satellite i.
Eigen::MatrixXd range_jacobian(const GeometrySnapshot& g);

/// J = sum_i sigma_i^-2 h_i h_i^T with eigenvalue-based rank detection
/// (relative threshold 1e-10 * lambda_max). CRLB is reported on the
/// observable subspace; directions in null(J) are listed explicitly instead
/// of failing the inversion.
FisherReport fisher_information(const Eigen::MatrixXd& H, const Eigen::VectorXd& noise_std);

}  // namespace speccart
