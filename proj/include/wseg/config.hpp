#pragma once

#include <filesystem>
#include <string_view>

#include <json.hpp>

namespace wseg {

// Parses the TOML subset used by config files: comments, [table] / [a.b]
// headers, bare or dotted keys, and values that are strings, integers, floats,
// booleans or flat arrays of those. Throws FormatError with the line number.
nlohmann::json parse_toml(std::string_view text);

// Reads a .toml or .json file into a JSON object.
nlohmann::json load_config_file(const std::filesystem::path& path);

}  // namespace wseg
