#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace crtcea {

/// Plain-text configuration: `key = value` lines grouped under `[section]`
/// headers. Keys before any header live in the "" section. '#' starts a
/// comment. Values keep internal whitespace (lists are space-separated).
class Config {
  public:
    static Config parse_file(const std::string &path);
    static Config parse_string(const std::string &text);

    bool has_section(const std::string &section) const;
    bool has(const std::string &section, const std::string &key) const;

    std::string get(const std::string &section, const std::string &key) const;
    std::string get_or(const std::string &section, const std::string &key,
                       const std::string &fallback) const;

    double get_double(const std::string &section, const std::string &key) const;
    double get_double_or(const std::string &section, const std::string &key, double fallback) const;
    long get_int(const std::string &section, const std::string &key) const;
    long get_int_or(const std::string &section, const std::string &key, long fallback) const;
    bool get_bool(const std::string &section, const std::string &key) const;
    bool get_bool_or(const std::string &section, const std::string &key, bool fallback) const;
    std::uint64_t get_seed_or(const std::string &section, const std::string &key,
                              std::uint64_t fallback) const;

    /// Space-separated list value; empty when the key is absent.
    std::vector<std::string> get_list(const std::string &section, const std::string &key) const;

    std::vector<std::string> section_names() const;
    const std::map<std::string, std::string> &section(const std::string &name) const;

    void set(const std::string &section, const std::string &key, const std::string &value);

    /// Canonical serialization (sorted sections and keys); used for hashing.
    std::string to_string() const;

  private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

/// Splits a whitespace-separated string into tokens.
std::vector<std::string> split_tokens(const std::string &text);

/// FNV-1a 64-bit hash, used for provenance stamps on output tables.
std::uint64_t fnv1a_hash(const std::string &text);

} // namespace crtcea
