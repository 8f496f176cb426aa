#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace speccart {

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

/// Write via temp file + rename so partially written outputs never appear.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// CSV with a header row; every numeric cell uses round-trip precision.
std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);

}  // namespace speccart
