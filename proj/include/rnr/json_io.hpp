#pragma once

#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace rnr {

// Fixed 17-significant-digit decimal rendering so emitted numbers are
// bit-faithful and diff-able across runs.
std::string fmt17(double v);

// Writes ordered JSON with 2-space indentation and a trailing newline.
void write_json_file(const std::string& path, const nlohmann::ordered_json& j);

// CSV with a header row; every numeric cell rendered via fmt17.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  void row_mixed(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t n_cols_;
};

}  // namespace rnr
