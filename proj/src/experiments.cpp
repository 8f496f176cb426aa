#include "speccart/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "speccart/allocation.hpp"
#include "speccart/attention.hpp"
#include "speccart/benchmarks.hpp"
#include "speccart/common.hpp"
#include "speccart/estimators.hpp"
#include "speccart/geometry.hpp"
#include "speccart/io.hpp"
#include "speccart/measurements.hpp"
#include "speccart/radiomap.hpp"

namespace speccart {

namespace {

using nlohmann::json;

std::string grid_csv(const RadioMapGrid& g) {
  std::string out = "x0,x1,y0,y1,nx,ny\n";
  out += format_double(g.x0) + "," + format_double(g.x1) + "," + format_double(g.y0) + "," +
         format_double(g.y1) + "," + std::to_string(g.nx) + "," + std::to_string(g.ny) + "\n";
  // Row-major over y rows: line iy holds values for ix = 0..nx-1.
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      out += format_double(g.values(ix, iy));
      out += (ix + 1 < g.nx) ? ',' : '\n';
    }
  }
  return out;
}

json report_json(const ErrorReport& r) {
  return json{{"mean", r.mean}, {"p90", r.p90}, {"max", r.max}};
}

json metrics_json(const RemMetrics& m) {
  json j{{"rmse", m.rmse}, {"mae", m.mae}, {"maxae", m.maxae}};
  if (m.r2) {
    j["r2"] = *m.r2;
  } else {
    j["r2"] = nullptr;  // constant truth field: undefined
  }
  return j;
}

std::string section_of(const std::string& experiment) {
  std::string s = experiment;
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

GeometrySnapshot snapshot_2d(const Eigen::Vector2d& user,
                             const std::vector<Eigen::Vector2d>& sats) {
  GeometrySnapshot g;
  g.user_pos = user;
  for (const auto& s : sats) {
    SatState st;
    st.pos = s;
    g.sats.push_back(st);
  }
  return g;
}

RunArtifacts run_fim_demo(const ExperimentConfig&) {
  RunArtifacts art;

  // Homogeneous-noise geometry: three satellites, sigma = 5 m.
  GeometrySnapshot g2 = snapshot_2d({0.0, 0.0}, {{0.0, 10000.0}, {10000.0, 0.0}, {-10000.0, 0.0}});
  Eigen::MatrixXd H2 = range_jacobian(g2);
  FisherReport full = fisher_information(H2, Eigen::Vector3d::Constant(5.0));
  FisherReport reduced = fisher_information(H2.bottomRows(2), Eigen::Vector2d::Constant(5.0));

  // SNR-selection geometry: two strong satellites nearly collinear plus one
  // weak but diverse satellite.
  GeometrySnapshot g3 = snapshot_2d({0.0, 0.0}, {{10000.0, 0.0}, {9000.0, 1000.0}, {0.0, 10000.0}});
  Eigen::MatrixXd H3 = range_jacobian(g3);
  FisherReport j12 = fisher_information(H3.topRows(2), Eigen::Vector2d::Ones());
  FisherReport j123 = fisher_information(H3, Eigen::Vector3d(1.0, 1.0, 5.0));

  json m;
  m["homogeneous"] = {
      {"H", matrix_to_json(H2)},
      {"J", matrix_to_json(full.info)},
      {"crlb", matrix_to_json(full.crlb)},
      {"std_bounds", vector_to_json(full.crlb.diagonal().cwiseSqrt())},
      {"reduced_rank", reduced.rank},
      {"reduced_unobservable",
       vector_to_json(reduced.unobservable_dirs.empty() ? Eigen::VectorXd()
                                                        : reduced.unobservable_dirs.front())},
  };
  m["snr_selection"] = {
      {"J12", matrix_to_json(j12.info)},
      {"J12_inv", matrix_to_json(j12.crlb)},
      {"J123", matrix_to_json(j123.info)},
      {"J123_inv", matrix_to_json(j123.crlb)},
      {"std_bounds_12", vector_to_json(j12.crlb.diagonal().cwiseSqrt())},
      {"std_bounds_123", vector_to_json(j123.crlb.diagonal().cwiseSqrt())},
  };
  art.metrics = m;
  return art;
}

RunArtifacts run_reliability_demo(const ExperimentConfig& cfg) {
  RunArtifacts art;
  std::string fixture = cfg.raw.get_string("reliability_demo", "fixture", "");
  InfScene scene = fixture.empty() ? inf_scene_fixture() : load_inf_scene(fixture);

  SampleSet samples;
  samples.locations = scene.sensors;
  samples.values = scene.measured_dbm;

  WeightVector w_unif = idw_weights(scene.query, samples, scene.idw_exponent);
  double est_unif = w_unif.w.dot(samples.values);

  double beta = solve_reliability_beta(w_unif, samples.values, 3, scene.target_w4_rel);
  WeightVector w_rel = reliability_weights(w_unif, samples.values, beta);
  double est_rel = w_rel.w.dot(samples.values);

  json m;
  m["w_unif"] = vector_to_json(w_unif.w);
  m["w4_unif"] = w_unif.w(3);
  m["beta_star"] = beta;
  m["beta_star_fixture"] = scene.beta_star;
  m["w_rel"] = vector_to_json(w_rel.w);
  m["w4_rel"] = w_rel.w(3);
  m["estimate_unif_dbm"] = est_unif;
  m["estimate_rel_dbm"] = est_rel;
  m["truth_dbm"] = scene.query_truth_dbm;
  m["error_unif_db"] = est_unif - scene.query_truth_dbm;
  m["error_rel_db"] = est_rel - scene.query_truth_dbm;

  std::vector<std::vector<double>> rows;
  for (int i = 0; i < samples.size(); ++i) {
    double d = (scene.query - samples.locations.row(i).transpose()).norm();
    rows.push_back({static_cast<double>(i + 1), d, samples.values(i), w_unif.w(i), w_rel.w(i)});
  }
  art.files["weights.csv"] = csv_table({"sensor", "distance_m", "measured_dbm", "w_unif", "w_rel"},
                                       rows);
  art.metrics = m;
  return art;
}

RunArtifacts run_radiomap(const ExperimentConfig& cfg) {
  const std::string sec = "radiomap";
  RemBenchConfig bench;
  bench.seed = *cfg.seed;
  bench.grid_nx = static_cast<int>(cfg.raw.get_int(sec, "grid_nx", bench.grid_nx));
  bench.grid_ny = static_cast<int>(cfg.raw.get_int(sec, "grid_ny", bench.grid_ny));
  bench.num_samples = static_cast<int>(cfg.raw.get_int(sec, "num_samples", bench.num_samples));
  bench.sample_noise = cfg.raw.get_double(sec, "sample_noise", bench.sample_noise);
  bench.num_train_queries =
      static_cast<int>(cfg.raw.get_int(sec, "num_train_queries", bench.num_train_queries));
  bench.idw_exponent = cfg.raw.get_double(sec, "idw_exponent", bench.idw_exponent);
  bench.nw_bandwidth = cfg.raw.get_double(sec, "nw_bandwidth", bench.nw_bandwidth);
  bench.train.learning_rate = cfg.raw.get_double(sec, "learning_rate", bench.train.learning_rate);
  bench.train.epochs = static_cast<int>(cfg.raw.get_int(sec, "epochs", bench.train.epochs));
  bench.train.scorer_hidden =
      static_cast<int>(cfg.raw.get_int(sec, "scorer_hidden", bench.train.scorer_hidden));
  bench.train.predictor_hidden =
      static_cast<int>(cfg.raw.get_int(sec, "predictor_hidden", bench.train.predictor_hidden));

  RemBenchResult res = run_rem_benchmark(bench);

  RunArtifacts art;
  json m;
  m["idw"] = metrics_json(res.metrics_idw);
  m["nw"] = metrics_json(res.metrics_nw);
  m["attention"] = metrics_json(res.metrics_attn);
  m["train"] = {{"epochs", res.loss_curve.size()},
                {"loss_first", res.loss_curve.front()},
                {"loss_final", res.loss_curve.back()}};
  art.metrics = m;

  art.files["truth_grid.csv"] = grid_csv(res.truth);
  art.files["pred_idw.csv"] = grid_csv(res.pred_idw);
  art.files["pred_nw.csv"] = grid_csv(res.pred_nw);
  art.files["pred_attention.csv"] = grid_csv(res.pred_attn);
  auto error_grid = [](const RadioMapGrid& pred, const RadioMapGrid& truth) {
    RadioMapGrid e = pred;
    e.values = (pred.values - truth.values).cwiseAbs();
    return e;
  };
  art.files["error_idw.csv"] = grid_csv(error_grid(res.pred_idw, res.truth));
  art.files["error_nw.csv"] = grid_csv(error_grid(res.pred_nw, res.truth));
  art.files["error_attention.csv"] = grid_csv(error_grid(res.pred_attn, res.truth));

  std::vector<std::vector<double>> loss_rows;
  for (std::size_t e = 0; e < res.loss_curve.size(); ++e) {
    loss_rows.push_back({static_cast<double>(e), res.loss_curve[e]});
  }
  art.files["loss_curve.csv"] = csv_table({"epoch", "loss"}, loss_rows);
  return art;
}

RunArtifacts run_localize_nw(const ExperimentConfig& cfg) {
  const std::string sec = "localize_nw";
  TrajectoryBenchConfig bench;
  bench.seed = *cfg.seed;
  bench.n = static_cast<int>(cfg.raw.get_int(sec, "n", bench.n));
  bench.noise_sigma = cfg.raw.get_double(sec, "noise_sigma", bench.noise_sigma);
  bench.outlier_fraction = cfg.raw.get_double(sec, "outlier_fraction", bench.outlier_fraction);
  bench.outlier_sigma = cfg.raw.get_double(sec, "outlier_sigma", bench.outlier_sigma);
  bench.nw_bandwidth = cfg.raw.get_double(sec, "nw_bandwidth", bench.nw_bandwidth);
  bench.ma_window = static_cast<int>(cfg.raw.get_int(sec, "ma_window", bench.ma_window));

  TrajectoryBenchResult res = run_trajectory_benchmark(bench);

  RunArtifacts art;
  art.metrics = json{{"rmse_raw", res.rmse_raw},
                     {"rmse_ma", res.rmse_ma},
                     {"rmse_nw", res.rmse_nw},
                     {"smoothness_raw", res.smooth_raw},
                     {"smoothness_ma", res.smooth_ma},
                     {"smoothness_nw", res.smooth_nw}};

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < res.times.size(); ++i) {
    rows.push_back({res.times[i], res.truth[i].x(), res.truth[i].y(), res.raw[i].x(),
                    res.raw[i].y(), res.ma[i].x(), res.ma[i].y(), res.nw[i].x(), res.nw[i].y()});
  }
  art.files["trajectory.csv"] = csv_table(
      {"t", "truth_x", "truth_y", "raw_x", "raw_y", "ma_x", "ma_y", "nw_x", "nw_y"}, rows);

  Eigen::MatrixXd W = nw_time_weights(res.times, bench.nw_bandwidth);
  std::string weights = "i,j,weight\n";
  for (int i = 0; i < W.rows(); ++i) {
    for (int j = 0; j < W.cols(); ++j) {
      weights += std::to_string(i) + "," + std::to_string(j) + "," + format_double(W(i, j)) + "\n";
    }
  }
  art.files["nw_weights.csv"] = std::move(weights);
  return art;
}

RunArtifacts run_localize_attn(const ExperimentConfig& cfg) {
  const std::string sec = "localize_attn";
  CaseStudyConfig bench;
  bench.seed = *cfg.seed;
  bench.steps = static_cast<int>(cfg.raw.get_int(sec, "steps", bench.steps));
  bench.num_sats = static_cast<int>(cfg.raw.get_int(sec, "num_sats", bench.num_sats));
  bench.range_sigma_m = cfg.raw.get_double(sec, "range_sigma", bench.range_sigma_m);
  bench.nlos.contamination_target =
      cfg.raw.get_double(sec, "contamination", bench.nlos.contamination_target);
  bench.train.learning_rate = cfg.raw.get_double(sec, "learning_rate", bench.train.learning_rate);
  bench.train.epochs = static_cast<int>(cfg.raw.get_int(sec, "epochs", bench.train.epochs));
  bench.train_windows = static_cast<int>(cfg.raw.get_int(sec, "train_windows", bench.train_windows));
  bench.test_windows = static_cast<int>(cfg.raw.get_int(sec, "test_windows", bench.test_windows));
  bench.ekf_accel_psd = cfg.raw.get_double(sec, "ekf_accel_psd", bench.ekf_accel_psd);
  bench.train.seed = bench.seed;

  CaseStudyResult res = run_case_study(bench);

  RunArtifacts art;
  art.metrics = json{{"baseline", report_json(res.baseline)},
                     {"corrected", report_json(res.corrected)},
                     {"ekf", report_json(res.ekf)},
                     {"improvement_pct", res.improvement_pct},
                     {"mean_attention_nlos", res.mean_attention_nlos},
                     {"mean_attention_los", res.mean_attention_los},
                     {"train_residual_var", res.train_residual_var}};

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < res.test_epochs.size(); ++i) {
    rows.push_back({static_cast<double>(res.test_epochs[i]), res.truth_test[i].x(),
                    res.truth_test[i].y(), res.baseline_test[i].x(), res.baseline_test[i].y(),
                    res.corrected_test[i].x(), res.corrected_test[i].y(), res.ekf_test[i].x(),
                    res.ekf_test[i].y()});
  }
  art.files["trajectory.csv"] = csv_table({"epoch", "truth_x", "truth_y", "baseline_x",
                                           "baseline_y", "corrected_x", "corrected_y", "ekf_x",
                                           "ekf_y"},
                                          rows);

  std::string heat = "epoch";
  for (int k = 0; k < res.attention_heatmap.cols(); ++k) heat += ",sat" + std::to_string(k);
  heat += "\n";
  for (std::size_t i = 0; i < res.test_epochs.size(); ++i) {
    heat += std::to_string(res.test_epochs[i]);
    for (int k = 0; k < res.attention_heatmap.cols(); ++k) {
      heat += "," + format_double(res.attention_heatmap(static_cast<int>(i), k));
    }
    heat += "\n";
  }
  art.files["attention_heatmap.csv"] = std::move(heat);

  std::vector<std::vector<double>> cdf_rows;
  for (std::size_t i = 0; i < res.baseline.cdf.size(); ++i) {
    cdf_rows.push_back({res.baseline.cdf[i].first, res.baseline.cdf[i].second,
                        res.corrected.cdf[i].first, res.corrected.cdf[i].second});
  }
  art.files["error_cdf.csv"] = csv_table(
      {"baseline_error_m", "baseline_fraction", "corrected_error_m", "corrected_fraction"},
      cdf_rows);
  return art;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> channel_vectors(const ExperimentConfig& cfg,
                                                            const std::string& sec) {
  std::vector<double> beta_list = cfg.raw.get_list(sec, "beta");
  std::vector<double> sigma_list = cfg.raw.get_list(sec, "sigma");
  if (!beta_list.empty()) {
    Eigen::VectorXd beta = Eigen::Map<Eigen::VectorXd>(beta_list.data(), beta_list.size());
    Eigen::VectorXd sigma = Eigen::Map<Eigen::VectorXd>(sigma_list.data(), sigma_list.size());
    return {beta, sigma};
  }
  int m = static_cast<int>(cfg.raw.get_int(sec, "num_channels", 8));
  Rng rng = Rng(*cfg.seed).stream(3);
  Eigen::VectorXd beta(m), sigma(m);
  for (int i = 0; i < m; ++i) {
    beta(i) = rng.uniform(0.2, 2.0);
    sigma(i) = rng.uniform(0.1, 1.5);
  }
  return {beta, sigma};
}

RunArtifacts run_waterfill(const ExperimentConfig& cfg) {
  const std::string sec = "waterfill";
  auto [beta, sigma] = channel_vectors(cfg, sec);
  double power = cfg.raw.get_double(sec, "total_power", 1.0);
  AllocationResult res = waterfill(beta, sigma, power);

  RunArtifacts art;
  art.metrics = json{{"p", vector_to_json(res.p)},
                     {"nu", res.nu},
                     {"active_set", res.active_set},
                     {"kkt_residual", res.kkt_residual},
                     {"capacity_nats", res.capacity_nats},
                     {"capacity_bits", res.capacity_bits()}};
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < beta.size(); ++i) {
    rows.push_back({static_cast<double>(i), beta(i), sigma(i), res.p(i)});
  }
  art.files["allocation.csv"] = csv_table({"channel", "beta", "sigma", "p"}, rows);
  return art;
}

RunArtifacts run_adv_waterfill(const ExperimentConfig& cfg) {
  const std::string sec = "adv_waterfill";
  auto [beta, sigma] = channel_vectors(cfg, sec);
  ChannelSet channels;
  channels.beta = beta;
  channels.sigma = sigma;
  channels.total_power = cfg.raw.get_double(sec, "total_power", 1.0);
  channels.total_interference = cfg.raw.get_double(sec, "total_interference", 0.5);
  AllocationResult res = minimax_waterfill(channels);

  // Residual of the coupled water-level relation on jointly active channels.
  double relation_residual = 0.0;
  std::vector<double> relation;
  for (int i = 0; i < beta.size(); ++i) {
    if (res.p(i) > 1e-9 && res.n(i) > 1e-9 * std::max(1.0, channels.total_interference)) {
      relation.push_back(1.0 / (beta(i) * res.nu) - 1.0 / (sigma(i) + res.n(i)));
    }
  }
  for (std::size_t a = 0; a < relation.size(); ++a) {
    for (std::size_t b = a + 1; b < relation.size(); ++b) {
      relation_residual = std::max(relation_residual, std::abs(relation[a] - relation[b]));
    }
  }

  RunArtifacts art;
  art.metrics = json{{"p", vector_to_json(res.p)},
                     {"n", vector_to_json(res.n)},
                     {"nu", res.nu},
                     {"mu", res.mu},
                     {"active_set", res.active_set},
                     {"kkt_residual", res.kkt_residual},
                     {"mu_nu_relation_residual", relation_residual},
                     {"capacity_nats", res.capacity_nats},
                     {"capacity_bits", res.capacity_bits()},
                     {"converged", res.converged},
                     {"rounds", res.rounds}};
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < beta.size(); ++i) {
    rows.push_back({static_cast<double>(i), beta(i), sigma(i), res.p(i), res.n(i)});
  }
  art.files["allocation.csv"] = csv_table({"channel", "beta", "sigma", "p", "n"}, rows);
  return art;
}

RunArtifacts run_beamhop(const ExperimentConfig& cfg) {
  const std::string sec = "beamhop";
  int slots = static_cast<int>(cfg.raw.get_int(sec, "slots", 4));
  int beams = static_cast<int>(cfg.raw.get_int(sec, "beams", 5));
  int bmax = static_cast<int>(cfg.raw.get_int(sec, "bmax", 2));

  Eigen::MatrixXd rates(slots, beams);
  std::vector<double> flat = cfg.raw.get_list(sec, "rates");
  if (!flat.empty()) {
    require(static_cast<int>(flat.size()) == slots * beams,
            "beamhop: rates list must have slots*beams entries");
    for (int t = 0; t < slots; ++t) {
      for (int b = 0; b < beams; ++b) rates(t, b) = flat[t * beams + b];
    }
  } else {
    Rng rng = Rng(*cfg.seed).stream(4);
    for (int t = 0; t < slots; ++t) {
      for (int b = 0; b < beams; ++b) rates(t, b) = rng.uniform(0.0, 10.0);
    }
  }

  BeamHopResult res = beam_hop(rates, bmax);
  RunArtifacts art;
  art.metrics = json{{"objective", res.objective}, {"bmax", bmax}};

  std::string sched = "slot";
  for (int b = 0; b < beams; ++b) sched += ",beam" + std::to_string(b);
  sched += "\n";
  for (int t = 0; t < slots; ++t) {
    sched += std::to_string(t);
    for (int b = 0; b < beams; ++b) sched += "," + std::to_string(res.schedule(t, b));
    sched += "\n";
  }
  art.files["schedule.csv"] = std::move(sched);

  std::vector<std::vector<double>> rate_rows;
  for (int t = 0; t < slots; ++t) {
    std::vector<double> row{static_cast<double>(t)};
    for (int b = 0; b < beams; ++b) row.push_back(rates(t, b));
    rate_rows.push_back(row);
  }
  std::vector<std::string> header{"slot"};
  for (int b = 0; b < beams; ++b) header.push_back("beam" + std::to_string(b));
  art.files["rates.csv"] = csv_table(header, rate_rows);
  return art;
}

}  // namespace

std::vector<std::string> RunArtifacts::manifest() const {
  std::vector<std::string> names;
  for (const auto& [name, content] : files) names.push_back(name);
  return names;
}

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  std::vector<std::string> violations = validate(cfg);
  if (!violations.empty()) {
    std::string msg = "invalid config:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ValidationError(msg);
  }

  RunArtifacts art;
  if (cfg.experiment == "fim-demo") {
    art = run_fim_demo(cfg);
  } else if (cfg.experiment == "reliability-demo") {
    art = run_reliability_demo(cfg);
  } else if (cfg.experiment == "radiomap") {
    art = run_radiomap(cfg);
  } else if (cfg.experiment == "localize-nw") {
    art = run_localize_nw(cfg);
  } else if (cfg.experiment == "localize-attn") {
    art = run_localize_attn(cfg);
  } else if (cfg.experiment == "waterfill") {
    art = run_waterfill(cfg);
  } else if (cfg.experiment == "adv-waterfill") {
    art = run_adv_waterfill(cfg);
  } else if (cfg.experiment == "beamhop") {
    art = run_beamhop(cfg);
  } else {
    throw ValidationError("unknown experiment: " + cfg.experiment);
  }

  art.metrics["experiment"] = cfg.experiment;
  if (cfg.seed) art.metrics["seed"] = *cfg.seed;
  art.files["metrics.json"] = art.metrics.dump(2) + "\n";
  if (cfg.format == "csv") {
    // Flat key,value view of the metric payload for spreadsheet users.
    std::string flat = "key,value\n";
    std::function<void(const std::string&, const json&)> walk = [&](const std::string& prefix,
                                                                    const json& node) {
      if (node.is_object()) {
        for (auto it = node.begin(); it != node.end(); ++it) {
          walk(prefix.empty() ? it.key() : prefix + "." + it.key(), it.value());
        }
      } else if (node.is_array()) {
        for (std::size_t i = 0; i < node.size(); ++i) {
          walk(prefix + "[" + std::to_string(i) + "]", node[i]);
        }
      } else {
        flat += prefix + "," + node.dump() + "\n";
      }
    };
    walk("", art.metrics);
    art.files["metrics.csv"] = flat;
  }
  return art;
}

void write_artifacts(const RunArtifacts& artifacts, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& [name, content] : artifacts.files) {
    atomic_write(out_dir / name, content);
  }
  nlohmann::json manifest;
  manifest["files"] = artifacts.manifest();
  manifest["experiment"] = artifacts.metrics.value("experiment", "");
  atomic_write(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace speccart
