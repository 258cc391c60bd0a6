#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "pglim/types.hpp"

namespace pglim {

inline constexpr int kSchemaVersion = 1;

// Matrices travel as row-major nested arrays.
nlohmann::json matrix_to_json(const Eigen::MatrixXd& M);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j,
                                 const std::string& name);

// System file: {schema_version, A, B, SigmaW, Q, R, C?, SigmaV?}.
struct SystemFile {
  StateSpaceSystem system;
  CostSpec cost;
  std::optional<Eigen::MatrixXd> C;
  std::optional<Eigen::MatrixXd> SigmaV;

  bool partially_observed() const { return C.has_value(); }
  OutputSystem output_system() const;
};

nlohmann::json system_file_to_json(const SystemFile& file);
SystemFile system_file_from_json(const nlohmann::json& j);
SystemFile load_system_file(const std::string& path);

// 17 significant digits; round-trips doubles exactly.
std::string format_double(double value);

// CSV cells are preformatted strings; rows joined with ',' and LF endings.
std::string to_csv(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows);

std::string read_file(const std::string& path);

// Writes through a temp file in the same directory, then renames.
void atomic_write_file(const std::string& path, const std::string& content);

}  // namespace pglim
