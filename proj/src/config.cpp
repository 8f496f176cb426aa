#include "speccart/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "speccart/common.hpp"

namespace speccart {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', "config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      require(!section.empty(), "config line " + std::to_string(lineno) + ": empty section name");
      cfg.sections_[section];
      continue;
    }
    auto eq = line.find('=');
    require(eq != std::string::npos,
            "config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), "config line " + std::to_string(lineno) + ": empty key");
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  auto v = get(section, key);
  return v ? *v : fallback;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    double d = std::stod(*v, &used);
    require(used == v->size(), "config: bad number for " + key + ": " + *v);
    return d;
  } catch (const std::logic_error&) {
    throw ValidationError("config: bad number for " + key + ": " + *v);
  }
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  require(ec == std::errc() && ptr == v->data() + v->size(),
          "config: bad integer for " + key + ": " + *v);
  return out;
}

std::vector<double> Config::get_list(const std::string& section, const std::string& key) const {
  auto v = get(section, key);
  std::vector<double> out;
  if (!v) return out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::logic_error&) {
      throw ValidationError("config: bad list entry for " + key + ": " + item);
    }
  }
  return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = value;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "fim-demo",    "reliability-demo", "radiomap", "localize-nw",
      "localize-attn", "waterfill",       "adv-waterfill", "beamhop"};
  return names;
}

ExperimentConfig make_experiment_config(const Config& cfg) {
  ExperimentConfig ec;
  ec.experiment = cfg.get_string("", "experiment", "");
  if (cfg.has("", "seed")) {
    ec.seed = static_cast<std::uint64_t>(cfg.get_int("", "seed", 0));
  }
  ec.output_dir = cfg.get_string("", "output_dir", "out");
  ec.format = cfg.get_string("", "format", "json");
  ec.raw = cfg;
  return ec;
}

namespace {

// Section name for an experiment: dashes become underscores.
std::string section_of(const std::string& experiment) {
  std::string s = experiment;
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

const std::map<std::string, std::vector<std::string>>& known_keys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"fim_demo", {}},
      {"reliability_demo", {"fixture"}},
      {"radiomap",
       {"grid_nx", "grid_ny", "num_samples", "sample_noise", "num_train_queries", "idw_exponent",
        "nw_bandwidth", "learning_rate", "epochs", "scorer_hidden", "predictor_hidden"}},
      {"localize_nw",
       {"n", "noise_sigma", "outlier_fraction", "outlier_sigma", "nw_bandwidth", "ma_window"}},
      {"localize_attn",
       {"steps", "num_sats", "range_sigma", "contamination", "learning_rate", "epochs",
        "train_windows", "test_windows", "ekf_accel_psd"}},
      {"waterfill", {"beta", "sigma", "total_power", "num_channels"}},
      {"adv_waterfill", {"beta", "sigma", "total_power", "total_interference", "num_channels"}},
      {"beamhop", {"rates", "slots", "beams", "bmax"}},
  };
  return keys;
}

}  // namespace

std::vector<std::string> validate(const ExperimentConfig& cfg) {
  std::vector<std::string> violations;
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end()) {
    violations.push_back("experiment: unknown experiment '" + cfg.experiment + "'");
    return violations;
  }
  std::string sec = section_of(cfg.experiment);

  if (cfg.format != "json" && cfg.format != "csv") {
    violations.push_back("format: must be json or csv");
  }

  static const std::vector<std::string> stochastic = {"radiomap", "localize-nw", "localize-attn"};
  bool needs_seed = std::find(stochastic.begin(), stochastic.end(), cfg.experiment) !=
                    stochastic.end();
  // Random-instance allocation runs also need a seed.
  if ((cfg.experiment == "waterfill" || cfg.experiment == "adv-waterfill") &&
      !cfg.raw.has(sec, "beta")) {
    needs_seed = true;
  }
  if (cfg.experiment == "beamhop" && !cfg.raw.has(sec, "rates")) needs_seed = true;
  if (needs_seed && !cfg.seed) {
    violations.push_back("seed: required for experiment " + cfg.experiment);
  }

  // Unknown sections / keys are configuration mistakes, not silently ignored.
  for (const auto& [name, kv] : cfg.raw.sections()) {
    if (name.empty()) {
      for (const auto& [key, value] : kv) {
        if (key != "experiment" && key != "seed" && key != "output_dir" && key != "format") {
          violations.push_back(key + ": unknown top-level key");
        }
      }
      continue;
    }
    auto it = known_keys().find(name);
    if (it == known_keys().end()) {
      violations.push_back(name + ": unknown section");
      continue;
    }
    if (name != sec && !kv.empty()) continue;  // other experiments' sections are fine
    for (const auto& [key, value] : kv) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
        violations.push_back(name + "." + key + ": unknown key");
      }
    }
  }

  auto positive = [&](const std::string& key, double fallback) {
    try {
      if (cfg.raw.get_double(sec, key, fallback) <= 0.0) {
        violations.push_back(sec + "." + key + ": must be positive");
      }
    } catch (const ValidationError& e) {
      violations.push_back(e.what());
    }
  };

  try {
    if (cfg.experiment == "radiomap") {
      positive("nw_bandwidth", 0.08);
      positive("idw_exponent", 2.0);
      positive("learning_rate", 0.05);
      positive("sample_noise", 0.02);
      if (cfg.raw.get_int(sec, "epochs", 1500) < 1) violations.push_back("radiomap.epochs: must be >= 1");
      if (cfg.raw.get_int(sec, "num_samples", 60) < 1) violations.push_back("radiomap.num_samples: must be >= 1");
      if (cfg.raw.get_int(sec, "grid_nx", 40) < 2 || cfg.raw.get_int(sec, "grid_ny", 40) < 2) {
        violations.push_back("radiomap.grid: resolution must be at least 2x2");
      }
    } else if (cfg.experiment == "localize-nw") {
      positive("nw_bandwidth", 0.03);
      positive("noise_sigma", 0.1);
      std::int64_t w = cfg.raw.get_int(sec, "ma_window", 15);
      if (w < 1 || w % 2 == 0) violations.push_back("localize_nw.ma_window: must be odd and >= 1");
      double frac = cfg.raw.get_double(sec, "outlier_fraction", 0.075);
      if (frac < 0.0 || frac > 1.0) violations.push_back("localize_nw.outlier_fraction: must be in [0,1]");
      if (cfg.raw.get_int(sec, "n", 160) < 3) violations.push_back("localize_nw.n: must be >= 3");
    } else if (cfg.experiment == "localize-attn") {
      positive("range_sigma", 3.0);
      positive("learning_rate", 0.02);
      double contamination = cfg.raw.get_double(sec, "contamination", 0.12);
      if (contamination < 0.0 || contamination > 1.0) {
        violations.push_back("localize_attn.contamination: must be in [0,1]");
      }
      std::int64_t steps = cfg.raw.get_int(sec, "steps", 500);
      std::int64_t train_w = cfg.raw.get_int(sec, "train_windows", 340);
      std::int64_t test_w = cfg.raw.get_int(sec, "test_windows", 150);
      if (train_w + test_w > steps - 10 + 1) {
        violations.push_back("localize_attn: train+test windows exceed the window count");
      }
    } else if (cfg.experiment == "waterfill" || cfg.experiment == "adv-waterfill") {
      std::vector<double> beta = cfg.raw.get_list(sec, "beta");
      std::vector<double> sigma = cfg.raw.get_list(sec, "sigma");
      if (beta.size() != sigma.size()) {
        violations.push_back(sec + ": beta and sigma must have matching lengths");
      }
      for (double b : beta) {
        if (b <= 0.0) violations.push_back(sec + ".beta: entries must be positive");
      }
      for (double s : sigma) {
        if (s <= 0.0) violations.push_back(sec + ".sigma: entries must be positive");
      }
      positive("total_power", 1.0);
      if (cfg.experiment == "adv-waterfill" &&
          cfg.raw.get_double(sec, "total_interference", 0.5) < 0.0) {
        violations.push_back("adv_waterfill.total_interference: must be nonnegative");
      }
    } else if (cfg.experiment == "beamhop") {
      std::int64_t beams = cfg.raw.get_int(sec, "beams", 5);
      std::int64_t bmax = cfg.raw.get_int(sec, "bmax", 2);
      if (beams < 1) violations.push_back("beamhop.beams: must be >= 1");
      if (bmax < 1 || bmax > beams) violations.push_back("beamhop.bmax: must be in [1, beams]");
      if (cfg.raw.get_int(sec, "slots", 4) < 1) violations.push_back("beamhop.slots: must be >= 1");
    }
  } catch (const ValidationError& e) {
    violations.push_back(e.what());
  }
  return violations;
}

}  // namespace speccart
