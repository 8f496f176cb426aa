#pragma once

#include <Eigen/Dense>
#include <vector>

#include "speccart/localization.hpp"
#include "speccart/measurements.hpp"
#include "speccart/radiomap.hpp"

namespace speccart {

// Reproducible experiment pipelines behind the CLI experiments. Each takes a
// config with an explicit seed and returns plain data; file emission lives in
// experiments.cpp.

// --- Trajectory smoothing benchmark ------------------------------------------

struct TrajectoryBenchConfig {
  int n = 160;
  double noise_sigma = 0.1;
  double outlier_fraction = 0.075;
  double outlier_sigma = 0.6;
  double nw_bandwidth = 0.03;  // in units of the [0,1) time axis
  int ma_window = 15;
  std::uint64_t seed = 1;
};

struct TrajectoryBenchResult {
  std::vector<double> times;
  std::vector<Eigen::Vector2d> truth, raw, ma, nw;
  double rmse_raw = 0.0, rmse_ma = 0.0, rmse_nw = 0.0;
  double smooth_raw = 0.0, smooth_ma = 0.0, smooth_nw = 0.0;
};

TrajectoryBenchResult run_trajectory_benchmark(const TrajectoryBenchConfig& cfg);

/// sqrt(mean |est - truth|^2) over a trajectory.
double trajectory_rmse(const std::vector<Eigen::Vector2d>& est,
                       const std::vector<Eigen::Vector2d>& truth);

// --- Attention-corrector case study -------------------------------------------

struct CaseStudyConfig {
  int steps = 500;
  int num_sats = 10;
  double sat_radius_m = 10000.0;
  double path_scale_m = 150.0;
  double range_sigma_m = 3.0;
  NlosBurstSpec nlos{20, 50, 50.0, 18.0, 0.12};
  double snr_los = 0.8;
  double snr_nlos = 0.45;
  double snr_jitter = 0.05;
  double residual_scale_m = 25.0;  // feature normalization
  int train_windows = 340;
  int test_windows = 150;
  CorrectorTrainConfig train;
  double ekf_accel_psd = 0.05;
  std::uint64_t seed = 1;
};

struct CaseStudyResult {
  // Test-split statistics (window end epochs).
  ErrorReport baseline;
  ErrorReport corrected;
  ErrorReport ekf;
  double improvement_pct = 0.0;  // mean error, corrected vs baseline
  double mean_attention_nlos = 0.0;
  double mean_attention_los = 0.0;
  std::vector<int> test_epochs;
  std::vector<Eigen::Vector2d> truth_test, baseline_test, corrected_test, ekf_test;
  Eigen::MatrixXd attention_heatmap;  // test epochs x K
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> nlos_test;  // test epochs x K
  std::vector<double> loss_curve;
  double train_residual_var = 0.0;  // per-axis variance used for the EKF R
};

CaseStudyResult run_case_study(const CaseStudyConfig& cfg);

// --- Radio-map reconstruction benchmark ---------------------------------------

struct RemBenchConfig {
  int grid_nx = 40, grid_ny = 40;
  int num_samples = 60;
  double sample_noise = 0.02;
  int num_train_queries = 400;
  double idw_exponent = 2.0;
  double nw_bandwidth = 0.08;
  RemTrainConfig train;
  std::uint64_t seed = 1;
};

struct RemBenchResult {
  FieldSpec field;
  SampleSet samples;
  RadioMapGrid truth, pred_idw, pred_nw, pred_attn;
  RemMetrics metrics_idw, metrics_nw, metrics_attn;
  std::vector<double> loss_curve;
};

/// Field spec drawn from the seed: three bumps with amplitudes in [0.5, 1],
/// widths in [0.08, 0.2], centers in [0.15, 0.85]^2, plus a 0.1-magnitude
/// linear trend.
FieldSpec random_field_spec(std::uint64_t seed);

RemBenchResult run_rem_benchmark(const RemBenchConfig& cfg);

}  // namespace speccart
