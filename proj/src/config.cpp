#include "crtcea/config.hpp"
#include "crtcea/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace crtcea {

namespace {

std::string trim(const std::string &s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

} // namespace

std::vector<std::string> split_tokens(const std::string &text) {
    std::vector<std::string> out;
    std::istringstream iss(text);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

std::uint64_t fnv1a_hash(const std::string &text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Config Config::parse_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

Config Config::parse_string(const std::string &text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::string current;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw InputError("config line " + std::to_string(lineno) + ": unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            cfg.sections_[current]; // section may stay empty
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw InputError("config line " + std::to_string(lineno) + ": empty key");
        cfg.sections_[current][key] = value;
    }
    return cfg;
}

bool Config::has_section(const std::string &section) const {
    return sections_.count(section) > 0;
}

bool Config::has(const std::string &section, const std::string &key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

std::string Config::get(const std::string &section, const std::string &key) const {
    auto it = sections_.find(section);
    if (it == sections_.end() || !it->second.count(key))
        throw InputError("config: missing key '" + key + "' in section [" + section + "]");
    return it->second.at(key);
}

std::string Config::get_or(const std::string &section, const std::string &key,
                           const std::string &fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

double Config::get_double(const std::string &section, const std::string &key) const {
    const std::string v = get(section, key);
    double out = 0.0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw InputError("config: key '" + key + "' in [" + section + "] is not a number: '" + v + "'");
    return out;
}

double Config::get_double_or(const std::string &section, const std::string &key, double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

long Config::get_int(const std::string &section, const std::string &key) const {
    const std::string v = get(section, key);
    long out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw InputError("config: key '" + key + "' in [" + section + "] is not an integer: '" + v + "'");
    return out;
}

long Config::get_int_or(const std::string &section, const std::string &key, long fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
}

bool Config::get_bool(const std::string &section, const std::string &key) const {
    const std::string v = get(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InputError("config: key '" + key + "' in [" + section + "] is not a boolean: '" + v + "'");
}

bool Config::get_bool_or(const std::string &section, const std::string &key, bool fallback) const {
    return has(section, key) ? get_bool(section, key) : fallback;
}

std::uint64_t Config::get_seed_or(const std::string &section, const std::string &key,
                                  std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    std::uint64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw InputError("config: key '" + key + "' in [" + section + "] is not a seed: '" + v + "'");
    return out;
}

std::vector<std::string> Config::get_list(const std::string &section, const std::string &key) const {
    if (!has(section, key)) return {};
    return split_tokens(get(section, key));
}

std::vector<std::string> Config::section_names() const {
    std::vector<std::string> names;
    names.reserve(sections_.size());
    for (const auto &kv : sections_) names.push_back(kv.first);
    return names;
}

const std::map<std::string, std::string> &Config::section(const std::string &name) const {
    auto it = sections_.find(name);
    if (it == sections_.end())
        throw InputError("config: missing section [" + name + "]");
    return it->second;
}

void Config::set(const std::string &section, const std::string &key, const std::string &value) {
    sections_[section][key] = value;
}

std::string Config::to_string() const {
    std::ostringstream out;
    for (const auto &[name, kv] : sections_) {
        if (!name.empty()) out << "[" << name << "]\n";
        for (const auto &[k, v] : kv) out << k << " = " << v << "\n";
    }
    return out.str();
}

} // namespace crtcea
