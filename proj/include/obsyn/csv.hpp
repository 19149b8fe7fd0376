#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace obsyn {

/// Rectangular numeric table with a header row.
struct Table {
  std::vector<std::string> columns;
  Eigen::MatrixXd data;  // rows x columns.size()
};

/// Writes RFC-4180-style CSV: '.' decimal separator, 17 significant digits
/// (round-trip exact for finite doubles), newline-terminated final row.
/// Throws IoError.
void emit_csv(const Table& table, const std::filesystem::path& path);

/// Reads a CSV written by emit_csv. Throws IoError on malformed input.
Table parse_csv(const std::filesystem::path& path);

}  // namespace obsyn
