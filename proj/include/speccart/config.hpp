#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace speccart {

/// Minimal INI-style config: top-level `key = value` pairs plus one
/// `[section]` per experiment. Lines starting with # are comments.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  std::vector<double> get_list(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  // sections_[""] holds top-level keys.
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

struct ExperimentConfig {
  std::string experiment;
  std::optional<std::uint64_t> seed;
  std::string output_dir = "out";
  std::string format = "json";  // metric payload format: json or csv
  Config raw;
};

/// Known experiment names in CLI order.
const std::vector<std::string>& experiment_names();

ExperimentConfig make_experiment_config(const Config& cfg);

/// Static precondition checks; empty means runnable. Unknown experiments,
/// missing seeds for stochastic experiments, bad parameter ranges and
/// unknown keys all land here.
std::vector<std::string> validate(const ExperimentConfig& cfg);

}  // namespace speccart
