#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace netsched {

inline constexpr const char* kVersion = "0.1.0";

// Writes CSV artifacts with a reproducibility preamble: '#'-prefixed
// key/value lines (config hash, seed, version, anything the caller adds)
// followed by a regular header row.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path,
            const std::map<std::string, std::string>& metadata,
            const std::vector<std::string>& columns);
  ~CsvWriter();

  void row(const std::vector<std::string>& cells);

  static std::string num(double value);

 private:
  std::ofstream out_;
  std::size_t columns_ = 0;
};

struct CsvContent {
  std::map<std::string, std::string> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

CsvContent read_csv(const std::filesystem::path& path);

}  // namespace netsched
