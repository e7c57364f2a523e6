#include "ivsign/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace ivsign::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_csv(const std::string& path, const std::string& schema,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_csv: cannot open '" + path + "'");
  }
  out << "#schema=" << schema << "\n";
  for (std::size_t j = 0; j < header.size(); ++j) {
    out << header[j] << (j + 1 < header.size() ? "," : "\n");
  }
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::runtime_error("write_csv: row width mismatch in '" + path + "'");
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << row[j] << (j + 1 < row.size() ? "," : "\n");
    }
  }
  if (!out) {
    throw std::runtime_error("write_csv: write failed for '" + path + "'");
  }
}

void append_manifest_line(const std::string& path, const nlohmann::json& object) {
  std::ofstream out(path, std::ios::app);
  if (!out) {
    throw std::runtime_error("append_manifest_line: cannot open '" + path + "'");
  }
  out << object.dump() << "\n";
}

}  // namespace ivsign::io
