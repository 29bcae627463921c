#include "netsched/csv.hpp"

#include <sstream>

#include "netsched/errors.hpp"

namespace netsched {

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::map<std::string, std::string>& metadata,
                     const std::vector<std::string>& columns)
    : out_(path), columns_(columns.size()) {
  if (!out_) throw ConfigError("cannot open " + path.string() + " for writing");
  out_ << "# version: " << kVersion << "\n";
  for (const auto& [key, value] : metadata)
    out_ << "# " << key << ": " << value << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ",";
    out_ << columns[i];
  }
  out_ << "\n";
}

CsvWriter::~CsvWriter() = default;

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw ConfigError("csv row width does not match the header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ",";
    out_ << cells[i];
  }
  out_ << "\n";
}

std::string CsvWriter::num(double value) {
  std::ostringstream out;
  out.precision(17);
  out << value;
  return out.str();
}

CsvContent read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  CsvContent content;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto colon = line.find(':');
      if (colon != std::string::npos) {
        std::string key = line.substr(1, colon - 1);
        std::string value = line.substr(colon + 1);
        auto trim = [](std::string& s) {
          while (!s.empty() && s.front() == ' ') s.erase(s.begin());
          while (!s.empty() && s.back() == ' ') s.pop_back();
        };
        trim(key);
        trim(value);
        content.metadata[key] = value;
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header_seen) {
      content.columns = std::move(cells);
      header_seen = true;
    } else {
      content.rows.push_back(std::move(cells));
    }
  }
  return content;
}

}  // namespace netsched
