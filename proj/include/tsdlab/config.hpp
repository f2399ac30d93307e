#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tsdlab/errors.hpp"

namespace tsdlab {

// Flat key=value config: one pair per line, `#` starts a comment, blank
// lines ignored. Lists are comma-separated. Later assignments win; --set
// overrides beat file values.
class ConfigMap {
public:
    ConfigMap() = default;

    static ConfigMap parse_file(const std::filesystem::path& path);
    static ConfigMap parse_text(const std::string& text, const std::string& origin = "<text>");

    // "key=value" from a --set flag; malformed input throws ConfigError.
    void apply_override(const std::string& assignment);
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    long long require_int(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    double require_double(const std::string& key) const;
    std::vector<long long> get_int_list(const std::string& key) const;     // empty when absent
    std::vector<double> get_double_list(const std::string& key) const;     // empty when absent
    std::vector<std::string> get_string_list(const std::string& key) const;

    // Unknown-key guard for override validation: every present key must be
    // in `known`.
    void require_known_keys(const std::vector<std::string>& known) const;

    // All resolved values plus any defaults recorded via note_default, one
    // sorted key=value per line.
    void note_default(const std::string& key, const std::string& value) const;
    std::string dump_effective() const;

private:
    long long parse_int(const std::string& key, const std::string& raw) const;
    double parse_double(const std::string& key, const std::string& raw) const;

    std::map<std::string, std::string> values_;
    std::map<std::string, int> lines_;
    // getters record the fallbacks they hand out so the effective-config
    // dump is complete
    mutable std::map<std::string, std::string> defaults_;
};

void write_effective_config(const ConfigMap& cfg, const std::filesystem::path& out_dir);

}  // namespace tsdlab
