#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "speccart/config.hpp"

namespace speccart {

/// Everything an experiment produced, staged in memory. Nothing touches the
/// filesystem until write_artifacts, so a failing run leaves no outputs.
struct RunArtifacts {
  nlohmann::json metrics;
  std::map<std::string, std::string> files;  // filename -> content

  std::vector<std::string> manifest() const;
};

/// Dispatch on cfg.experiment. Throws ValidationError for bad configs and
/// NumericalError for solver failures.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

/// Atomic per-file writes plus a manifest.json listing every emitted file.
void write_artifacts(const RunArtifacts& artifacts, const std::filesystem::path& out_dir);

}  // namespace speccart
