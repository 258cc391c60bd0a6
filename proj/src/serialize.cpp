#include "pglim/serialize.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pglim/errors.hpp"

namespace pglim {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j,
                                 const std::string& name) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw ValidationError("matrix '" + name +
                          "' must be a nonempty array of rows");
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  Eigen::MatrixXd M(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw ValidationError("matrix '" + name + "' has ragged rows");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) {
        throw ValidationError("matrix '" + name + "' has non-numeric entries");
      }
      M(i, c) = j[i][c].get<double>();
    }
  }
  return M;
}

OutputSystem SystemFile::output_system() const {
  if (!C.has_value() || !SigmaV.has_value()) {
    throw ValidationError("system file lacks C/SigmaV for output model");
  }
  return OutputSystem{system.A, system.B, *C, system.SigmaW, *SigmaV};
}

nlohmann::json system_file_to_json(const SystemFile& file) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["A"] = matrix_to_json(file.system.A);
  j["B"] = matrix_to_json(file.system.B);
  j["SigmaW"] = matrix_to_json(file.system.SigmaW);
  j["Q"] = matrix_to_json(file.cost.Q);
  j["R"] = matrix_to_json(file.cost.R);
  if (file.C) j["C"] = matrix_to_json(*file.C);
  if (file.SigmaV) j["SigmaV"] = matrix_to_json(*file.SigmaV);
  return j;
}

SystemFile system_file_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("system file must be an object");
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
    throw ValidationError("system file lacks integer schema_version");
  }
  if (j["schema_version"].get<int>() != kSchemaVersion) {
    throw ValidationError("unsupported schema_version");
  }
  for (const char* key : {"A", "B", "SigmaW", "Q", "R"}) {
    if (!j.contains(key)) {
      throw ValidationError(std::string("system file lacks '") + key + "'");
    }
  }
  SystemFile file;
  file.system.A = matrix_from_json(j["A"], "A");
  file.system.B = matrix_from_json(j["B"], "B");
  file.system.SigmaW = matrix_from_json(j["SigmaW"], "SigmaW");
  file.cost.Q = matrix_from_json(j["Q"], "Q");
  file.cost.R = matrix_from_json(j["R"], "R");
  if (j.contains("C")) file.C = matrix_from_json(j["C"], "C");
  if (j.contains("SigmaV")) file.SigmaV = matrix_from_json(j["SigmaV"], "SigmaV");
  if (file.C.has_value() != file.SigmaV.has_value()) {
    throw ValidationError("system file must provide C and SigmaV together");
  }

  validate_system(file.system);
  validate_cost(file.cost, file.system.dx(), file.system.du());
  if (file.C) validate_output_system(file.output_system());
  return file;
}

SystemFile load_system_file(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& err) {
    throw ValidationError("cannot parse '" + path + "': " + err.what());
  }
  return system_file_from_json(j);
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string to_csv(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path + "'");
  return buf.str();
}

void atomic_write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename temp file onto '" + path + "'");
  }
}

}  // namespace pglim
