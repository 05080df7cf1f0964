#pragma once
// CSV plumbing for the artifact formats.  All floating-point fields are
// written with 17 significant digits ("%.17g"), enough to round-trip a
// double exactly, and formatting goes through snprintf so the output is
// locale-independent and byte-stable.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hyperlam/errors.hpp"

namespace hyperlam {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct CsvWriter {
  std::ofstream out;

  CsvWriter(const std::filesystem::path& path, const std::string& header) {
    std::filesystem::create_directories(path.parent_path().empty()
                                            ? std::filesystem::path(".")
                                            : path.parent_path());
    out.open(path, std::ios::binary);  // binary: identical bytes on any host
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << header << "\n";
  }

  void row(const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ",";
      out << fields[i];
    }
    out << "\n";
  }
};

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open for reading: " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace hyperlam
