#include "speccart/benchmarks.hpp"

#include <cmath>

#include "speccart/common.hpp"
#include "speccart/estimators.hpp"

namespace speccart {

double trajectory_rmse(const std::vector<Eigen::Vector2d>& est,
                       const std::vector<Eigen::Vector2d>& truth) {
  require(est.size() == truth.size() && !est.empty(), "trajectory_rmse: size mismatch");
  KahanSum acc;
  for (std::size_t i = 0; i < est.size(); ++i) acc.add((est[i] - truth[i]).squaredNorm());
  return std::sqrt(acc.value() / static_cast<double>(est.size()));
}

TrajectoryBenchResult run_trajectory_benchmark(const TrajectoryBenchConfig& cfg) {
  require(cfg.n >= 3, "trajectory benchmark: n too small");
  TrajectoryBenchResult res;
  res.times.resize(cfg.n);
  for (int i = 0; i < cfg.n; ++i) res.times[i] = static_cast<double>(i) / cfg.n;
  res.truth = gen_trajectory(res.times);

  HypothesisNoise noisy = corrupt_hypotheses(res.truth, cfg.noise_sigma, cfg.outlier_fraction,
                                             cfg.outlier_sigma, cfg.seed);
  res.raw = noisy.hypotheses;
  res.ma = moving_average(res.raw, cfg.ma_window);
  res.nw = nw_traj_smooth(res.times, res.raw, cfg.nw_bandwidth);

  res.rmse_raw = trajectory_rmse(res.raw, res.truth);
  res.rmse_ma = trajectory_rmse(res.ma, res.truth);
  res.rmse_nw = trajectory_rmse(res.nw, res.truth);
  res.smooth_raw = smoothness_metric(res.raw);
  res.smooth_ma = smoothness_metric(res.ma);
  res.smooth_nw = smoothness_metric(res.nw);
  return res;
}

namespace {

struct Scenario {
  std::vector<Eigen::Vector2d> truth;
  std::vector<Eigen::VectorXd> sat_positions;
  std::vector<double> azimuths;
  Eigen::MatrixXd ranges;  // steps x K, corrupted
  Eigen::MatrixXd snr;     // steps x K
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> nlos;
};

Scenario make_scenario(const CaseStudyConfig& cfg) {
  Scenario sc;
  const int steps = cfg.steps;
  const int K = cfg.num_sats;

  std::vector<double> times(steps);
  for (int t = 0; t < steps; ++t) times[t] = static_cast<double>(t) / steps;
  std::vector<Eigen::Vector2d> unit = gen_trajectory(times);
  sc.truth.resize(steps);
  for (int t = 0; t < steps; ++t) sc.truth[t] = cfg.path_scale_m * unit[t];

  sc.azimuths.resize(K);
  sc.sat_positions.resize(K);
  for (int k = 0; k < K; ++k) {
    sc.azimuths[k] = 2.0 * kPi * k / K + 0.1;  // fixed offset breaks axis alignment
    Eigen::VectorXd s(2);
    s << cfg.sat_radius_m * std::cos(sc.azimuths[k]), cfg.sat_radius_m * std::sin(sc.azimuths[k]);
    sc.sat_positions[k] = s;
  }

  std::vector<Measurement> series;
  series.reserve(static_cast<std::size_t>(steps) * K);
  for (int t = 0; t < steps; ++t) {
    for (int k = 0; k < K; ++k) {
      Measurement m;
      m.modality = Modality::kRange;
      m.value = Eigen::VectorXd::Constant(1, (sc.truth[t] - sc.sat_positions[k].head<2>()).norm());
      m.sat_index = k;
      m.epoch = static_cast<double>(t);
      series.push_back(std::move(m));
    }
  }
  NoiseSpec noise;
  noise.range_sigma_m = cfg.range_sigma_m;
  CorruptionResult corr = corrupt(series, noise, cfg.nlos, cfg.seed, steps, K);
  sc.nlos = corr.nlos_flags;

  sc.ranges.resize(steps, K);
  for (int t = 0; t < steps; ++t) {
    for (int k = 0; k < K; ++k) sc.ranges(t, k) = corr.series[t * K + k].scalar();
  }

  Rng root(cfg.seed);
  sc.snr.resize(steps, K);
  for (int k = 0; k < K; ++k) {
    Rng snr_rng = root.stream(1000 + k);
    for (int t = 0; t < steps; ++t) {
      double base = sc.nlos(t, k) ? cfg.snr_nlos : cfg.snr_los;
      sc.snr(t, k) = std::clamp(base + cfg.snr_jitter * snr_rng.normal(), 0.0, 1.0);
    }
  }
  return sc;
}

}  // namespace

CaseStudyResult run_case_study(const CaseStudyConfig& cfg) {
  require(cfg.steps > cfg.train.arch.window, "case study: too few steps");
  const int steps = cfg.steps;
  const int K = cfg.num_sats;
  const int T = cfg.train.arch.window;

  Scenario sc = make_scenario(cfg);

  // Baseline: regularized Gauss-Newton per epoch, no reliability weighting.
  std::vector<Eigen::Vector2d> fixes(steps);
  Eigen::MatrixXd residuals(steps, K);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(K);
  Eigen::VectorXd init = Eigen::VectorXd::Zero(2);
  GaussNewtonOptions gn_opts;
  gn_opts.ridge = 1e-9;
  for (int t = 0; t < steps; ++t) {
    WlsProblem prob = make_range_problem(sc.sat_positions, sc.ranges.row(t).transpose(), ones,
                                         init, gn_opts);
    GaussNewtonResult fix = gauss_newton_solve(prob);
    fixes[t] = fix.estimate.head<2>();
    init = fix.estimate;  // warm start the next epoch
    for (int k = 0; k < K; ++k) {
      residuals(t, k) = sc.ranges(t, k) - (fixes[t] - sc.sat_positions[k].head<2>()).norm();
    }
  }

  // Per-epoch feature rows: (snr, azimuth proxy, |res|/scale, res/scale).
  auto epoch_features = [&](int t) {
    Eigen::MatrixXd X(K, 4);
    for (int k = 0; k < K; ++k) {
      X(k, 0) = sc.snr(t, k);
      X(k, 1) = sc.azimuths[k] / (2.0 * kPi);
      X(k, 2) = std::abs(residuals(t, k)) / cfg.residual_scale_m;
      X(k, 3) = residuals(t, k) / cfg.residual_scale_m;
    }
    return X;
  };

  const int num_windows = steps - T + 1;
  require(cfg.train_windows + cfg.test_windows <= num_windows,
          "case study: split larger than the window count");
  std::vector<SatFeatureWindow> windows(num_windows);
  for (int w = 0; w < num_windows; ++w) {
    windows[w].end_epoch = w + T - 1;
    windows[w].epochs.reserve(T);
    for (int t = w; t < w + T; ++t) windows[w].epochs.push_back(epoch_features(t));
  }

  // First train_windows windows train; the last test_windows evaluate. Any
  // slack between the two is dropped so the splits never share an epoch.
  std::vector<SatFeatureWindow> train_w(windows.begin(), windows.begin() + cfg.train_windows);
  std::vector<Eigen::Vector2d> train_fix, train_truth;
  for (int w = 0; w < cfg.train_windows; ++w) {
    train_fix.push_back(fixes[windows[w].end_epoch]);
    train_truth.push_back(sc.truth[windows[w].end_epoch]);
  }

  CorrectorTrainResult trained = corrector_train(train_w, train_fix, train_truth, cfg.train);

  CaseStudyResult res;
  res.loss_curve = trained.loss_curve;

  // Residual variance of the trained corrector on the train split, reused as
  // the EKF measurement covariance heuristic.
  KahanSum var_acc;
  for (int w = 0; w < cfg.train_windows; ++w) {
    Eigen::Vector2d corrected = train_fix[w] + corrector_forward(windows[w], trained.params);
    var_acc.add((corrected - train_truth[w]).squaredNorm());
  }
  res.train_residual_var = var_acc.value() / (2.0 * cfg.train_windows);

  const int first_test = num_windows - cfg.test_windows;
  res.attention_heatmap.resize(cfg.test_windows, K);
  res.nlos_test.resize(cfg.test_windows, K);
  std::vector<std::optional<Eigen::Vector2d>> ekf_obs;
  for (int i = 0; i < cfg.test_windows; ++i) {
    const SatFeatureWindow& w = windows[first_test + i];
    int t = w.end_epoch;
    res.test_epochs.push_back(t);
    res.truth_test.push_back(sc.truth[t]);
    res.baseline_test.push_back(fixes[t]);
    Eigen::Vector2d corrected = fixes[t] + corrector_forward(w, trained.params);
    res.corrected_test.push_back(corrected);
    ekf_obs.emplace_back(corrected);

    auto [Z, received] = spatial_attention(w.epochs.back(), trained.params);
    res.attention_heatmap.row(i) = received.transpose();
    for (int k = 0; k < K; ++k) res.nlos_test(i, k) = sc.nlos(t, k);
  }

  res.baseline = error_report(res.baseline_test, res.truth_test);
  res.corrected = error_report(res.corrected_test, res.truth_test);
  res.improvement_pct = 100.0 * (res.baseline.mean - res.corrected.mean) / res.baseline.mean;

  KahanSum attn_nlos, attn_los;
  int n_nlos = 0, n_los = 0;
  for (int i = 0; i < cfg.test_windows; ++i) {
    for (int k = 0; k < K; ++k) {
      if (res.nlos_test(i, k)) {
        attn_nlos.add(res.attention_heatmap(i, k));
        ++n_nlos;
      } else {
        attn_los.add(res.attention_heatmap(i, k));
        ++n_los;
      }
    }
  }
  res.mean_attention_nlos = n_nlos > 0 ? attn_nlos.value() / n_nlos : 0.0;
  res.mean_attention_los = n_los > 0 ? attn_los.value() / n_los : 0.0;

  // EKF over the corrected test observations.
  EkfState init_state;
  init_state.x << res.corrected_test.front().x(), res.corrected_test.front().y(), 0.0, 0.0;
  init_state.P = Eigen::Vector4d(25.0, 25.0, 4.0, 4.0).asDiagonal();
  EkfNoise noise;
  noise.accel_psd = cfg.ekf_accel_psd;
  noise.meas_cov = std::max(res.train_residual_var, 1e-6) * Eigen::Matrix2d::Identity();
  EkfRunResult ekf = ekf_run({}, ekf_obs, init_state, noise, 1.0);
  for (const auto& s : ekf.states) res.ekf_test.emplace_back(s.x.head<2>());
  res.ekf = error_report(res.ekf_test, res.truth_test);
  return res;
}

FieldSpec random_field_spec(std::uint64_t seed) {
  Rng rng = Rng(seed).stream(11);
  FieldSpec spec;
  for (int b = 0; b < 3; ++b) {
    GaussianBump bump;
    bump.center = Eigen::Vector2d(rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85));
    bump.amplitude = rng.uniform(0.5, 1.0);
    bump.width = rng.uniform(0.08, 0.2);
    spec.bumps.push_back(bump);
  }
  spec.trend_offset = 0.0;
  double angle = rng.uniform(0.0, 2.0 * kPi);
  spec.trend_x = 0.1 * std::cos(angle);
  spec.trend_y = 0.1 * std::sin(angle);
  return spec;
}

RemBenchResult run_rem_benchmark(const RemBenchConfig& cfg) {
  RemBenchResult res;
  res.field = random_field_spec(cfg.seed);

  Rng root(cfg.seed);
  Rng sample_rng = root.stream(21);
  res.samples.locations.resize(cfg.num_samples, 2);
  res.samples.values.resize(cfg.num_samples);
  for (int i = 0; i < cfg.num_samples; ++i) {
    Eigen::Vector2d x(sample_rng.uniform(), sample_rng.uniform());
    res.samples.locations.row(i) = x.transpose();
    res.samples.values(i) = res.field.eval(x) + sample_rng.normal(0.0, cfg.sample_noise);
  }

  Rng query_rng = root.stream(22);
  Eigen::MatrixX2d queries(cfg.num_train_queries, 2);
  Eigen::VectorXd targets(cfg.num_train_queries);
  for (int i = 0; i < cfg.num_train_queries; ++i) {
    Eigen::Vector2d q(query_rng.uniform(), query_rng.uniform());
    queries.row(i) = q.transpose();
    targets(i) = res.field.eval(q);
  }

  RemTrainConfig train = cfg.train;
  train.seed = root.stream(23).next_u64();
  RemTrainResult trained = attn_rem_train(res.samples, queries, targets, train);
  res.loss_curve = trained.loss_curve;

  res.truth = gen_field(res.field, 0.0, 1.0, 0.0, 1.0, cfg.grid_nx, cfg.grid_ny);
  res.pred_idw = eval_on_grid(0.0, 1.0, 0.0, 1.0, cfg.grid_nx, cfg.grid_ny,
                              [&](const Eigen::Vector2d& q) {
                                return idw(q, res.samples, cfg.idw_exponent);
                              });
  res.pred_nw = eval_on_grid(0.0, 1.0, 0.0, 1.0, cfg.grid_nx, cfg.grid_ny,
                             [&](const Eigen::Vector2d& q) {
                               return nw_interp(q, res.samples, cfg.nw_bandwidth);
                             });
  res.pred_attn = eval_on_grid(0.0, 1.0, 0.0, 1.0, cfg.grid_nx, cfg.grid_ny,
                               [&](const Eigen::Vector2d& q) {
                                 return trained.model.predict(q, res.samples);
                               });
  res.metrics_idw = rem_metrics(res.pred_idw, res.truth);
  res.metrics_nw = rem_metrics(res.pred_nw, res.truth);
  res.metrics_attn = rem_metrics(res.pred_attn, res.truth);
  return res;
}

}  // namespace speccart
