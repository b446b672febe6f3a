#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flowcast {

// Flat key = value configuration. Files may pull in other files with
// `include <path>` (relative to the including file); later assignments win.
// Precedence: built-in defaults < file < explicit overrides (CLI flags).
class RunConfig {
public:
    RunConfig() = default;

    static RunConfig from_file(const std::filesystem::path& path);
    static RunConfig from_string(const std::string& text);

    void merge_file(const std::filesystem::path& path);
    void set(const std::string& key, const std::string& value);
    // "key=value" strings, e.g. collected from repeated --set flags.
    void apply_overrides(const std::vector<std::string>& overrides);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    int64_t get_int(const std::string& key, int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // Same getters but required; missing key raises a config error.
    std::string require_string(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

    // Sorted "key = value" lines; the config hash is FNV-1a over this text.
    std::string canonical_string() const;
    std::string hash_hex() const;

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace flowcast
