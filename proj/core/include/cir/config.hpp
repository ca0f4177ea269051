#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cir {

using ConfigSection = std::map<std::string, std::string>;

/// Flat key-value text with [section] headers, '#' or ';' comments, and
/// key = value lines. Unknown sections are preserved; duplicate keys within a
/// section are a ConfigError.
struct ConfigFile {
    std::map<std::string, ConfigSection> sections;

    static ConfigFile parse(std::string_view text);
    static ConfigFile load(const std::string& path);

    bool has(const std::string& section) const { return sections.count(section) > 0; }
    const ConfigSection& section(const std::string& name) const;
};

/// Typed getters. The *_or forms fall back to a default when the key is
/// absent; the plain forms throw ConfigError.
std::string get_string(const ConfigSection& s, const std::string& key);
std::string get_string_or(const ConfigSection& s, const std::string& key, std::string fallback);
double get_double(const ConfigSection& s, const std::string& key);
double get_double_or(const ConfigSection& s, const std::string& key, double fallback);
std::int64_t get_int(const ConfigSection& s, const std::string& key);
std::int64_t get_int_or(const ConfigSection& s, const std::string& key, std::int64_t fallback);
bool get_bool_or(const ConfigSection& s, const std::string& key, bool fallback);
std::vector<std::uint64_t> get_u64_list(const ConfigSection& s, const std::string& key);

}  // namespace cir
