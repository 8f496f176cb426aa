#include "speccart/measurements.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "speccart/common.hpp"

namespace speccart {

std::string to_string(Modality m) {
  switch (m) {
    case Modality::kRange: return "range";
    case Modality::kRangeRate: return "range_rate";
    case Modality::kFdoa: return "fdoa";
    case Modality::kRss: return "rss";
    case Modality::kPositionHypothesis: return "position_hypothesis";
  }
  return "unknown";
}

double range_model(const GeometrySnapshot& g, int sat) {
  require(sat >= 0 && sat < static_cast<int>(g.sats.size()), "range_model: satellite index out of range");
  double rho = (g.user_pos - g.sats[sat].pos).norm();
  require(rho > 0.0, "range_model: degenerate geometry");
  return rho;
}

double range_rate(const GeometrySnapshot& g, int sat) {
  require(sat >= 0 && sat < static_cast<int>(g.sats.size()), "range_rate: satellite index out of range");
  require(g.has_velocity(), "range_rate: user velocity missing");
  require(g.sats[sat].vel.size() == g.dim(), "range_rate: satellite velocity missing");
  Eigen::VectorXd u = los_unit(g.user_pos, g.sats[sat].pos);
  return u.dot(g.user_vel - g.sats[sat].vel);
}

double fdoa(const GeometrySnapshot& g, int sat_i, int sat_j) {
  require(sat_i != sat_j, "fdoa: satellite pair must be distinct");
  return range_rate(g, sat_i) - range_rate(g, sat_j);
}

double rss_model(double p0_dbm, double alpha, double rho_m) {
  require(rho_m > 0.0, "rss_model: rho must be positive");
  require(alpha > 0.0, "rss_model: alpha must be positive");
  return p0_dbm - 10.0 * alpha * std::log10(rho_m);
}

double inf_pathloss(double d_m, double f_ghz, double tx_power_dbm, bool los) {
  require(d_m > 0.0, "inf_pathloss: distance must be positive");
  require(f_ghz > 0.0, "inf_pathloss: frequency must be positive");
  double pl = los ? 31.84 + 21.5 * std::log10(d_m) + 19.0 * std::log10(f_ghz)
                  : 33.63 + 21.9 * std::log10(d_m) + 20.0 * std::log10(f_ghz);
  return tx_power_dbm - pl;
}

std::vector<Eigen::Vector2d> gen_trajectory(const std::vector<double>& times) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(times.size());
  for (double t : times) {
    out.emplace_back(std::cos(2.0 * kPi * t) + 0.08 * std::cos(6.0 * kPi * t),
                     0.8 * std::sin(2.0 * kPi * t) + 0.05 * std::sin(4.0 * kPi * t));
  }
  return out;
}

void NlosBurstSpec::validate() const {
  require(burst_len_min > 0 && burst_len_min <= burst_len_max, "nlos: invalid burst length range");
  require(contamination_target >= 0.0 && contamination_target <= 1.0,
          "nlos: contamination_target must be in [0,1]");
  require(bias_std_m >= 0.0, "nlos: bias_std must be nonnegative");
}

namespace {

// Positive burst bias: redraw the Gaussian until it lands above zero.
double draw_positive_bias(Rng& rng, double mean, double std) {
  for (int k = 0; k < 64; ++k) {
    double b = rng.normal(mean, std);
    if (b > 0.0) return b;
  }
  return mean;  // unreachable for sane (mean, std)
}

}  // namespace

CorruptionResult corrupt(const std::vector<Measurement>& series, const NoiseSpec& noise,
                         const NlosBurstSpec& nlos, std::uint64_t seed, int num_steps,
                         int num_sats) {
  require(!series.empty(), "corrupt: empty series");
  require(num_steps > 0 && num_sats > 0, "corrupt: bad grid shape");
  nlos.validate();

  Rng root(seed);
  Rng placer = root.stream(0);

  CorruptionResult out;
  out.nlos_flags.setConstant(num_steps, num_sats, false);

  const double total = static_cast<double>(num_steps) * num_sats;
  const double target = nlos.contamination_target;
  if (target > 0.0) {
    require(nlos.burst_len_min <= num_steps, "corrupt: burst longer than the series");
    int flagged = 0;
    int attempts = 0;
    while (flagged / total < target && attempts < 10000) {
      ++attempts;
      int sat = static_cast<int>(placer.uniform_int(0, num_sats - 1));
      int len = static_cast<int>(placer.uniform_int(nlos.burst_len_min, nlos.burst_len_max));
      // Last burst: shrink so the realized fraction stays within +-0.02.
      int remaining = static_cast<int>(std::ceil(target * total)) - flagged;
      len = std::min(len, std::max(remaining, 1));
      len = std::min(len, num_steps);
      int start = static_cast<int>(placer.uniform_int(0, num_steps - len));
      bool overlap = false;
      for (int t = start; t < start + len; ++t) {
        if (out.nlos_flags(t, sat)) { overlap = true; break; }
      }
      if (overlap) continue;
      NlosBurst burst{sat, start, len, draw_positive_bias(placer, nlos.bias_mean_m, nlos.bias_std_m)};
      for (int t = start; t < start + len; ++t) out.nlos_flags(t, sat) = true;
      flagged += len;
      out.bursts.push_back(burst);
    }
    out.realized_contamination = flagged / total;
    require(std::abs(out.realized_contamination - target) <= 0.02,
            "corrupt: could not realize contamination target within +-2%");
  }

  // Per-satellite noise substreams, independent of how many satellites exist.
  std::vector<Rng> sat_rngs;
  sat_rngs.reserve(num_sats);
  for (int k = 0; k < num_sats; ++k) sat_rngs.push_back(root.stream(1 + k));

  out.series = series;
  for (std::size_t idx = 0; idx < out.series.size(); ++idx) {
    Measurement& m = out.series[idx];
    int step = static_cast<int>(idx) / num_sats;
    int sat = m.sat_index >= 0 ? m.sat_index : m.sat_pair[0];
    require(sat >= 0 && sat < num_sats, "corrupt: measurement has no valid satellite index");
    Rng& r = sat_rngs[sat];
    switch (m.modality) {
      case Modality::kRange:
        m.value(0) += r.normal(0.0, noise.range_sigma_m);
        if (step < num_steps && out.nlos_flags(step, sat)) {
          for (const NlosBurst& b : out.bursts) {
            if (b.sat == sat && step >= b.start && step < b.start + b.length) {
              m.value(0) += b.bias;
              break;
            }
          }
        }
        break;
      case Modality::kRangeRate:
        m.value(0) += r.normal(0.0, noise.range_rate_sigma);
        break;
      case Modality::kFdoa:
        m.value(0) += r.normal(0.0, noise.fdoa_sigma);
        break;
      case Modality::kRss:
        m.value(0) += r.normal(0.0, noise.rss_shadow_sigma_db);
        break;
      case Modality::kPositionHypothesis:
        break;  // handled by corrupt_hypotheses
    }
  }
  return out;
}

HypothesisNoise corrupt_hypotheses(const std::vector<Eigen::Vector2d>& truth, double sigma,
                                   double outlier_fraction, double outlier_sigma,
                                   std::uint64_t seed) {
  require(!truth.empty(), "corrupt_hypotheses: empty trajectory");
  require(outlier_fraction >= 0.0 && outlier_fraction <= 1.0,
          "corrupt_hypotheses: outlier_fraction must be in [0,1]");
  Rng root(seed);
  Rng noise_rng = root.stream(0);
  Rng pick_rng = root.stream(1);

  const int n = static_cast<int>(truth.size());
  HypothesisNoise out;
  out.hypotheses.reserve(n);
  for (const auto& p : truth) {
    out.hypotheses.emplace_back(p.x() + noise_rng.normal(0.0, sigma),
                                p.y() + noise_rng.normal(0.0, sigma));
  }

  int n_out = static_cast<int>(std::lround(outlier_fraction * n));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  pick_rng.shuffle(order);
  out.outlier_indices.assign(order.begin(), order.begin() + n_out);
  std::sort(out.outlier_indices.begin(), out.outlier_indices.end());
  for (int i : out.outlier_indices) {
    out.hypotheses[i].x() += pick_rng.normal(0.0, outlier_sigma);
    out.hypotheses[i].y() += pick_rng.normal(0.0, outlier_sigma);
  }
  return out;
}

void InfScene::validate() const {
  require(sensors.rows() == static_cast<int>(los.size()), "inf scene: los flag count mismatch");
  require(sensors.rows() == raytraced_dbm.size() && sensors.rows() == measured_dbm.size(),
          "inf scene: measurement count mismatch");
  require(idw_exponent > 0.0, "inf scene: idw exponent must be positive");
}

InfScene inf_scene_fixture() {
  InfScene s;
  s.bs = Eigen::Vector2d(2.0, 2.0);
  s.f_ghz = 3.5;
  s.tx_power_dbm = 23.0;
  s.sensors.resize(4, 2);
  s.sensors << 12.0, 5.0, 18.0, 12.0, 8.0, 14.0, 16.0, 8.1;
  s.los = {true, true, true, false};
  s.raytraced_dbm = Eigen::Vector4d(-38.6, -47.1, -40.5, -52.3);
  s.measured_dbm = Eigen::Vector4d(-36.9, -50.1, -42.2, -62.7);
  s.noise_sigma_db = 1.5;
  s.nlos_shadow_sigma_db = 7.2;
  s.query = Eigen::Vector2d(13.0, 9.0);
  s.query_truth_dbm = -46.6;
  s.idw_exponent = 2.0;
  s.target_w4_rel = 0.063;
  s.beta_star = 0.24989297807426908;
  return s;
}

InfScene load_inf_scene(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "load_inf_scene: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("load_inf_scene: malformed JSON: " + std::string(e.what()));
  }
  InfScene s;
  try {
    s.bs = Eigen::Vector2d(j.at("bs")[0].get<double>(), j.at("bs")[1].get<double>());
    s.f_ghz = j.at("f_ghz").get<double>();
    s.tx_power_dbm = j.at("tx_power_dbm").get<double>();
    auto sensors = j.at("sensors");
    s.sensors.resize(static_cast<int>(sensors.size()), 2);
    for (int i = 0; i < s.sensors.rows(); ++i) {
      s.sensors(i, 0) = sensors[i][0].get<double>();
      s.sensors(i, 1) = sensors[i][1].get<double>();
    }
    for (const auto& f : j.at("los")) s.los.push_back(f.get<bool>());
    auto vec = [&](const char* key) {
      auto arr = j.at(key);
      Eigen::VectorXd v(static_cast<int>(arr.size()));
      for (int i = 0; i < v.size(); ++i) v(i) = arr[i].get<double>();
      return v;
    };
    s.raytraced_dbm = vec("raytraced_dbm");
    s.measured_dbm = vec("measured_dbm");
    s.noise_sigma_db = j.at("noise_sigma_db").get<double>();
    s.nlos_shadow_sigma_db = j.at("nlos_shadow_sigma_db").get<double>();
    s.query = Eigen::Vector2d(j.at("query")[0].get<double>(), j.at("query")[1].get<double>());
    s.query_truth_dbm = j.at("query_truth_dbm").get<double>();
    s.idw_exponent = j.at("idw_exponent").get<double>();
    s.target_w4_rel = j.at("target_w4_rel").get<double>();
    s.beta_star = j.at("beta_star").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("load_inf_scene: missing or invalid field: " + std::string(e.what()));
  }
  s.validate();
  return s;
}

}  // namespace speccart
