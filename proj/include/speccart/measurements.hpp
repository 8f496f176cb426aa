#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "speccart/geometry.hpp"
#include "speccart/rng.hpp"

namespace speccart {

enum class Modality { kRange, kRangeRate, kFdoa, kRss, kPositionHypothesis };

std::string to_string(Modality m);

/// Optional per-observation quality descriptors.
struct Quality {
  double snr = 0.0;        // normalized [0,1]
  double residual = 0.0;   // units of the measurement
  double elevation = 0.0;  // rad or normalized proxy
};

/// One observation. Range-like modalities carry a scalar value and a single
/// satellite index; FDOA carries a satellite pair; position hypotheses carry
/// a 2-d or 3-d vector.
struct Measurement {
  Modality modality = Modality::kRange;
  Eigen::VectorXd value;
  int sat_index = -1;
  std::array<int, 2> sat_pair{-1, -1};
  double epoch = 0.0;
  std::optional<Quality> quality;

  double scalar() const { return value(0); }
};

// --- Forward models (noiseless; corruption is a separate step) ------------

/// rho_i = |p - s_i|.
double range_model(const GeometrySnapshot& g, int sat);

/// rhodot_i = u_i . (pdot - sdot_i). Requires velocities on both sides.
double range_rate(const GeometrySnapshot& g, int sat);

/// FDOA-type observable between two satellites: rhodot_i - rhodot_j.
double fdoa(const GeometrySnapshot& g, int sat_i, int sat_j);

/// Log-distance received power: P0 - 10 alpha log10(rho). Shadowing is added
/// by the corruption step, not here.
double rss_model(double p0_dbm, double alpha, double rho_m);

/// 3GPP TR 38.901 InF-DH received power at distance d:
///   LoS : Pt - (31.84 + 21.5 log10 d + 19.0 log10 f_GHz)
///   NLoS: Pt - (33.63 + 21.9 log10 d + 20.0 log10 f_GHz)
double inf_pathloss(double d_m, double f_ghz, double tx_power_dbm, bool los);

/// Closed-form benchmark trajectory:
///   x(t) = cos(2 pi t) + 0.08 cos(6 pi t)
///   y(t) = 0.8 sin(2 pi t) + 0.05 sin(4 pi t)
std::vector<Eigen::Vector2d> gen_trajectory(const std::vector<double>& times);

// --- Corruption ------------------------------------------------------------

/// Bursty NLOS bias model: bursts of [min,max] consecutive timesteps per
/// satellite, each adding a positive bias drawn once per burst from
/// N(bias_mean, bias_std^2), placed until the flagged fraction reaches
/// contamination_target (within +/- 0.02).
struct NlosBurstSpec {
  int burst_len_min = 20;
  int burst_len_max = 50;
  double bias_mean_m = 50.0;
  double bias_std_m = 18.0;
  double contamination_target = 0.12;

  void validate() const;
};

struct NlosBurst {
  int sat = 0;
  int start = 0;   // timestep index
  int length = 0;
  double bias = 0.0;
};

/// Output of corrupt(): the corrupted series plus ground-truth burst flags
/// for downstream evaluation.
struct CorruptionResult {
  std::vector<Measurement> series;
  std::vector<NlosBurst> bursts;
  // flags(t, k) = true when satellite k is inside an NLOS burst at step t.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> nlos_flags;
  double realized_contamination = 0.0;
};

/// Deterministic per seed. Gaussian noise (per-modality sigma) everywhere;
/// NLOS bias added to range-like modalities only; RSS gets lognormal
/// shadowing in dB (rss_shadow_sigma_db). Satellite k draws from substream k
/// so streams stay independent of satellite count.
///
/// The series is interpreted as num_steps x num_sats range-like observations
/// in epoch-major order when placing bursts.
struct NoiseSpec {
  double range_sigma_m = 0.0;
  double range_rate_sigma = 0.0;
  double fdoa_sigma = 0.0;
  double rss_shadow_sigma_db = 0.0;
};

CorruptionResult corrupt(const std::vector<Measurement>& series, const NoiseSpec& noise,
                         const NlosBurstSpec& nlos, std::uint64_t seed, int num_steps,
                         int num_sats);

/// Position-hypothesis corruption used by the trajectory benchmark:
/// z_i = y_i + N(0, sigma^2 I), then an exact round(frac*n) subset gets an
/// extra outlier offset N(0, outlier_sigma^2 I). Returns hypotheses plus the
/// outlier index set.
struct HypothesisNoise {
  std::vector<Eigen::Vector2d> hypotheses;
  std::vector<int> outlier_indices;
};

HypothesisNoise corrupt_hypotheses(const std::vector<Eigen::Vector2d>& truth, double sigma,
                                   double outlier_fraction, double outlier_sigma,
                                   std::uint64_t seed);

// --- InF reliability fixture ------------------------------------------------

/// Indoor-factory scene shipped as a fixture: the ray-traced powers and the
/// noisy measurement vector are fixed inputs, not regenerated.
struct InfScene {
  Eigen::Vector2d bs;
  double f_ghz = 3.5;
  double tx_power_dbm = 23.0;
  Eigen::MatrixX2d sensors;        // 4 x 2, meters
  std::vector<bool> los;           // per sensor
  Eigen::VectorXd raytraced_dbm;   // fixture input
  Eigen::VectorXd measured_dbm;    // fixture input (noise + shadowing applied)
  double noise_sigma_db = 1.5;
  double nlos_shadow_sigma_db = 7.2;
  Eigen::Vector2d query;
  double query_truth_dbm = -46.6;
  double idw_exponent = 2.0;
  double target_w4_rel = 0.063;    // reliability weight the demo solves beta for
  double beta_star = 0.0;          // stored root of the w4 match

  void validate() const;
};

/// Built-in copy of the shipped fixture (data/inf_scene.json).
InfScene inf_scene_fixture();

/// Parse the JSON fixture file.
InfScene load_inf_scene(const std::string& path);

}  // namespace speccart
