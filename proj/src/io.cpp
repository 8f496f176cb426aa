#include "speccart/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "speccart/common.hpp"

namespace speccart {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  return std::string(buf, ptr);
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out.good()) throw NumericalError("atomic_write: cannot open " + tmp.string());
    out << content;
    if (!out.good()) throw NumericalError("atomic_write: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    out += header[i];
    out += (i + 1 < header.size()) ? ',' : '\n';
  }
  for (const auto& row : rows) {
    require(row.size() == header.size(), "csv_table: row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += format_double(row[i]);
      out += (i + 1 < row.size()) ? ',' : '\n';
    }
  }
  return out;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

}  // namespace speccart
