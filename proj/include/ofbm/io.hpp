#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace ofbm::io {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view contents);
void write_atomic(const std::filesystem::path& path, const std::vector<char>& bytes);

std::string read_file(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] int column(std::string_view name) const;  // -1 when absent
};

CsvTable parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);

nlohmann::json to_json(const Eigen::MatrixXd& m);
nlohmann::json to_json(const Eigen::VectorXd& v);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

double parse_double(std::string_view text);

}  // namespace ofbm::io
