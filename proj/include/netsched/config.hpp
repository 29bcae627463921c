#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace netsched {

// Loads a JSON or TOML config. Format is auto-detected (extension first, then
// a content sniff). The TOML reader covers the subset used by the shipped
// configs: tables, dotted keys, strings, numbers, booleans and flat arrays.
nlohmann::json load_config(const std::filesystem::path& path);

nlohmann::json parse_toml(const std::string& text);

// FNV-1a over the canonical dump; embedded in artifact metadata.
std::uint64_t config_hash(const nlohmann::json& config);

}  // namespace netsched
