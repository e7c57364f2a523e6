#ifndef IVSIGN_IO_HPP
#define IVSIGN_IO_HPP

#include <string>
#include <vector>

#include <json.hpp>

namespace ivsign::io {

/// Fixed "%.12g" formatting so repeated runs with the same seed produce
/// byte-identical files.
std::string format_double(double v);

/// Writes "#schema=<schema>" followed by a header row and data rows.
void write_csv(const std::string& path, const std::string& schema,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Appends one compact JSON object as a line of the run manifest.
void append_manifest_line(const std::string& path, const nlohmann::json& object);

}  // namespace ivsign::io

#endif  // IVSIGN_IO_HPP
