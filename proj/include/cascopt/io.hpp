#pragma once

// Plain-text output. CSV files start with '#'-prefixed key = value lines,
// then one header row. Numbers are written with %.17g so reruns are
// byte-identical and values round-trip.

#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "cascopt/errors.hpp"

namespace cascopt {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::pair<std::string, std::string>> meta,
            std::vector<std::string> columns)
      : path_(path), out_(path, std::ios::binary), ncol_(columns.size()) {
    if (!out_) throw ConfigError("cannot open output file " + path);
    for (const auto& [k, v] : meta) out_ << "# " << k << " = " << v << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    if (values.size() != ncol_) throw ParameterError("csv", "row width does not match header");
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_double(values[i]);
    out_ << '\n';
  }

  // Mixed rows (labels next to numbers).
  void row_text(const std::vector<std::string>& cells) {
    if (cells.size() != ncol_) throw ParameterError("csv", "row width does not match header");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t ncol_;
};

inline void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file " + path);
  out << body;
}

}  // namespace cascopt
