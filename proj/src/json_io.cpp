#include "rnr/json_io.hpp"

#include <cstdio>

#include "rnr/errors.hpp"

namespace rnr {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_json_file(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot open output file for writing: " + path);
  }
  out << j.dump(2) << "\n";
  if (!out) {
    throw ConfigError("failed while writing output file: " + path);
  }
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& columns)
    : out_(path), n_cols_(columns.size()) {
  if (!out_) {
    throw ConfigError("cannot open output file for writing: " + path);
  }
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out_ << (i ? "," : "") << columns[i];
  }
  out_ << "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(fmt17(v));
  row_mixed(cells);
}

void CsvWriter::row_mixed(const std::vector<std::string>& cells) {
  if (cells.size() != n_cols_) {
    throw ConfigError("CSV row width does not match the header");
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out_ << (i ? "," : "") << cells[i];
  }
  out_ << "\n";
}

}  // namespace rnr
