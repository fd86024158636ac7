#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bip {

// Minimal TOML subset for experiment configs: [sections], key = value with
// strings, numbers, booleans, and single-line arrays. Keys are flattened to
// "section.key". Enough to round-trip what write_config_toml emits.
struct TomlValue {
    std::string raw;                 // scalar as written (quotes stripped)
    std::vector<std::string> items;  // array elements
    bool is_array = false;

    double as_double(const std::string& key) const;
    std::int64_t as_int(const std::string& key) const;
    bool as_bool(const std::string& key) const;
    std::vector<double> as_double_list(const std::string& key) const;
    std::vector<std::uint64_t> as_uint_list(const std::string& key) const;
};

using TomlTable = std::map<std::string, TomlValue>;

TomlTable parse_toml(const std::string& text, const std::string& origin);
TomlTable parse_toml_file(const std::string& path);

struct ExperimentConfig;
// Applies every recognized key; unknown keys are collected into one error.
void apply_toml(ExperimentConfig& cfg, const TomlTable& table);

}  // namespace bip
