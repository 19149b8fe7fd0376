#include "obsyn/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "obsyn/errors.hpp"

namespace obsyn {

void emit_csv(const Table& table, const std::filesystem::path& path) {
  if (table.data.size() > 0 &&
      static_cast<std::size_t>(table.data.cols()) != table.columns.size())
    throw IoError("emit_csv: column count does not match header");

  std::ofstream out(path);
  if (!out) throw IoError("emit_csv: cannot open " + path.string());

  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (table.columns[j].find_first_of(",\"\n") != std::string::npos)
      throw IoError("emit_csv: header fields must not contain comma, quote, or newline");
    out << (j ? "," : "") << table.columns[j];
  }
  out << "\n";

  char buf[40];
  for (Eigen::Index i = 0; i < table.data.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.data.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", table.data(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("emit_csv: write failed for " + path.string());
}

Table parse_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("parse_csv: cannot open " + path.string());

  Table table;
  std::string line;
  if (!std::getline(in, line)) throw IoError("parse_csv: missing header in " + path.string());
  std::stringstream header(line);
  std::string field;
  while (std::getline(header, field, ',')) table.columns.push_back(field);
  if (table.columns.empty()) throw IoError("parse_csv: empty header in " + path.string());

  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::size_t count = 0;
    while (std::getline(ss, field, ',')) {
      // strtod, not stod: stod throws out_of_range on subnormal values.
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0')
        throw IoError("parse_csv: non-numeric field '" + field + "' in " + path.string());
      values.push_back(v);
      ++count;
    }
    if (count != table.columns.size())
      throw IoError("parse_csv: ragged row in " + path.string());
    ++rows;
  }

  table.data.resize(rows, static_cast<Eigen::Index>(table.columns.size()));
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < table.data.cols(); ++j)
      table.data(i, j) = values[static_cast<std::size_t>(i * table.data.cols() + j)];
  return table;
}

}  // namespace obsyn
