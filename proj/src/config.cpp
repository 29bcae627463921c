#include "netsched/config.hpp"

#include <fstream>
#include <sstream>

#include "netsched/errors.hpp"

namespace netsched {
namespace {

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

nlohmann::json parse_toml_scalar(const std::string& raw) {
  std::string v = strip(raw);
  if (v.empty()) throw ConfigError("toml: empty value");
  if (v.front() == '"' || v.front() == '\'') {
    if (v.size() < 2 || v.back() != v.front())
      throw ConfigError("toml: unterminated string");
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  try {
    if (v.find_first_of(".eE") == std::string::npos &&
        v.find("inf") == std::string::npos && v.find("nan") == std::string::npos) {
      std::size_t pos = 0;
      long long i = std::stoll(v, &pos);
      if (pos == v.size()) return i;
    }
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("toml: cannot parse value '" + v + "'");
}

nlohmann::json parse_toml_value(const std::string& raw) {
  std::string v = strip(raw);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ConfigError("toml: unterminated array");
    nlohmann::json arr = nlohmann::json::array();
    std::string body = v.substr(1, v.size() - 2);
    std::string item;
    int depth = 0;
    bool in_string = false;
    char quote = 0;
    for (char c : body) {
      if (in_string) {
        item += c;
        if (c == quote) in_string = false;
        continue;
      }
      if (c == '"' || c == '\'') {
        in_string = true;
        quote = c;
        item += c;
      } else if (c == '[') {
        ++depth;
        item += c;
      } else if (c == ']') {
        --depth;
        item += c;
      } else if (c == ',' && depth == 0) {
        if (!strip(item).empty()) arr.push_back(parse_toml_value(item));
        item.clear();
      } else {
        item += c;
      }
    }
    if (!strip(item).empty()) arr.push_back(parse_toml_value(item));
    return arr;
  }
  return parse_toml_scalar(v);
}

std::vector<std::string> split_dotted(const std::string& key) {
  std::vector<std::string> parts;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) {
    part = strip(part);
    if (part.empty()) throw ConfigError("toml: empty key segment");
    parts.push_back(part);
  }
  return parts;
}

}  // namespace

nlohmann::json parse_toml(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  std::vector<std::string> table;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    // Strip comments outside strings.
    std::string clean;
    bool in_string = false;
    char quote = 0;
    for (char c : line) {
      if (in_string) {
        clean += c;
        if (c == quote) in_string = false;
      } else if (c == '"' || c == '\'') {
        in_string = true;
        quote = c;
        clean += c;
      } else if (c == '#') {
        break;
      } else {
        clean += c;
      }
    }
    clean = strip(clean);
    if (clean.empty()) continue;
    if (clean.front() == '[') {
      if (clean.back() != ']') throw ConfigError("toml: malformed table header");
      table = split_dotted(clean.substr(1, clean.size() - 2));
      continue;
    }
    auto eq = clean.find('=');
    if (eq == std::string::npos) throw ConfigError("toml: expected key = value");
    std::vector<std::string> keys = split_dotted(clean.substr(0, eq));
    nlohmann::json* node = &root;
    for (const auto& t : table) node = &(*node)[t];
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) node = &(*node)[keys[i]];
    (*node)[keys.back()] = parse_toml_value(clean.substr(eq + 1));
  }
  return root;
}

nlohmann::json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();

  std::string ext = path.extension().string();
  bool try_json_first = ext != ".toml";
  if (ext != ".json" && ext != ".toml") {
    // Sniff: JSON starts with '{' after whitespace.
    std::size_t b = text.find_first_not_of(" \t\r\n");
    try_json_first = b != std::string::npos && text[b] == '{';
  }
  if (try_json_first) {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      if (ext == ".json")
        throw ConfigError("invalid JSON config: " + std::string(e.what()));
    }
  }
  try {
    return parse_toml(text);
  } catch (const ConfigError& e) {
    throw ConfigError("config is neither valid JSON nor supported TOML: " +
                      std::string(e.what()));
  }
}

std::uint64_t config_hash(const nlohmann::json& config) {
  std::string dump = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace netsched
