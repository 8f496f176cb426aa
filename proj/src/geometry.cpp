#include "speccart/geometry.hpp"

#include <cmath>
#include <limits>

#include "speccart/common.hpp"

namespace speccart {

void GeometrySnapshot::validate() const {
  require(user_pos.size() == 2 || user_pos.size() == 3, "geometry: user_pos must be 2-d or 3-d");
  if (has_velocity()) {
    require(user_vel.size() == user_pos.size(), "geometry: user_vel dimension mismatch");
  }
  require(!sats.empty(), "geometry: no satellites");
  for (std::size_t i = 0; i < sats.size(); ++i) {
    require(sats[i].pos.size() == user_pos.size(), "geometry: satellite position dimension mismatch");
    if (sats[i].vel.size() > 0) {
      require(sats[i].vel.size() == user_pos.size(), "geometry: satellite velocity dimension mismatch");
    }
    require((sats[i].pos - user_pos).norm() > 0.0,
            "geometry: satellite " + std::to_string(i) + " coincides with user position");
  }
}

Eigen::VectorXd los_unit(const Eigen::VectorXd& user_pos, const Eigen::VectorXd& sat_pos) {
  require(user_pos.size() == sat_pos.size(), "los_unit: dimension mismatch");
  Eigen::VectorXd d = user_pos - sat_pos;
  double r = d.norm();
  require(r > 0.0, "los_unit: degenerate geometry, user and satellite coincide");
  return d / r;
}

Eigen::MatrixXd range_jacobian(const GeometrySnapshot& g) {
  g.validate();
  Eigen::MatrixXd H(static_cast<int>(g.sats.size()), g.dim());
  for (std::size_t i = 0; i < g.sats.size(); ++i) {
    H.row(static_cast<int>(i)) = los_unit(g.user_pos, g.sats[i].pos).transpose();
  }
  return H;
}

FisherReport fisher_information(const Eigen::MatrixXd& H, const Eigen::VectorXd& noise_std) {
  require(H.rows() == noise_std.size(), "fisher_information: row count does not match noise vector");
  require((noise_std.array() > 0.0).all(), "fisher_information: noise_std must be positive");

  const int d = static_cast<int>(H.cols());
  FisherReport rep;
  rep.info = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < H.rows(); ++i) {
    double w = 1.0 / (noise_std(i) * noise_std(i));
    rep.info.noalias() += w * H.row(i).transpose() * H.row(i);
  }
  // Symmetrize before the eigensolve; accumulation can leave ~1e-17 skew.
  rep.info = 0.5 * (rep.info + rep.info.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rep.info);
  const Eigen::VectorXd& lam = eig.eigenvalues();
  const Eigen::MatrixXd& U = eig.eigenvectors();

  double lam_max = lam.cwiseAbs().maxCoeff();
  double tol = 1e-10 * lam_max;

  rep.crlb = Eigen::MatrixXd::Zero(d, d);
  double lam_min_obs = std::numeric_limits<double>::infinity();
  for (int k = 0; k < d; ++k) {
    if (lam(k) > tol) {
      rep.rank += 1;
      lam_min_obs = std::min(lam_min_obs, lam(k));
      rep.crlb.noalias() += (1.0 / lam(k)) * U.col(k) * U.col(k).transpose();
    } else {
      rep.unobservable_dirs.push_back(U.col(k));
    }
  }
  rep.condition_number = (rep.rank == d && lam_max > 0.0)
                             ? lam_max / lam_min_obs
                             : std::numeric_limits<double>::infinity();
  return rep;
}

}  // namespace speccart
