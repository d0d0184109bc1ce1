#pragma once
// Minimal TOML-subset reader covering the bundled run configurations:
// comments, [section] / [section.sub] tables, and key = value lines with
// strings, booleans, integers, floats, and single-line arrays. Parsed into
// JSON so the rest of the pipeline has a single config representation.

#include <string>

#include <nlohmann/json.hpp>

namespace fit {

nlohmann::json parse_toml(const std::string& text, const std::string& source_name = "config");

// Dispatches on extension: .json parsed as JSON, everything else as TOML.
nlohmann::json load_config_file(const std::string& path);

} // namespace fit
