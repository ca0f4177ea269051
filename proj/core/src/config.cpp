#include "cir/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "cir/errors.hpp"

namespace cir {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text) {
    ConfigFile file;
    std::string current = "";
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        const std::string line = trim(text.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
            current = trim(std::string_view(line).substr(1, line.size() - 2));
            file.sections[current];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        auto [it, inserted] = file.sections[current].emplace(key, value);
        if (!inserted)
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key +
                              "' in section [" + current + "]");
    }
    return file;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const ConfigSection& ConfigFile::section(const std::string& name) const {
    auto it = sections.find(name);
    if (it == sections.end()) throw ConfigError("missing config section [" + name + "]");
    return it->second;
}

std::string get_string(const ConfigSection& s, const std::string& key) {
    auto it = s.find(key);
    if (it == s.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

std::string get_string_or(const ConfigSection& s, const std::string& key, std::string fallback) {
    auto it = s.find(key);
    return it == s.end() ? std::move(fallback) : it->second;
}

double get_double(const ConfigSection& s, const std::string& key) {
    const std::string v = get_string(s, key);
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
    }
}

double get_double_or(const ConfigSection& s, const std::string& key, double fallback) {
    return s.count(key) ? get_double(s, key) : fallback;
}

std::int64_t get_int(const ConfigSection& s, const std::string& key) {
    const std::string v = get_string(s, key);
    try {
        std::size_t used = 0;
        const std::int64_t i = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
    }
}

std::int64_t get_int_or(const ConfigSection& s, const std::string& key, std::int64_t fallback) {
    return s.count(key) ? get_int(s, key) : fallback;
}

bool get_bool_or(const ConfigSection& s, const std::string& key, bool fallback) {
    auto it = s.find(key);
    if (it == s.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "': '" + it->second + "' is not a boolean");
}

std::vector<std::uint64_t> get_u64_list(const ConfigSection& s, const std::string& key) {
    const std::string v = get_string(s, key);
    std::vector<std::uint64_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (t.empty()) continue;
        try {
            out.push_back(std::stoull(t));
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': '" + t + "' is not an unsigned integer");
        }
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

}  // namespace cir
