#include "tsdlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace tsdlab {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

ConfigMap ConfigMap::parse_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config: " + path.string());
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_text(buf.str(), path.string());
}

ConfigMap ConfigMap::parse_text(const std::string& text, const std::string& origin) {
    ConfigMap cfg;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key=value, got '" + line + "'",
                              line_no);
        std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key", line_no);
        cfg.values_[key] = trim(line.substr(eq + 1));
        cfg.lines_[key] = line_no;
    }
    return cfg;
}

void ConfigMap::apply_override(const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must be key=value, got '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void ConfigMap::set(const std::string& key, const std::string& value) {
    values_[key] = value;
    lines_[key] = 0;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        note_default(key, fallback);
        return fallback;
    }
    return it->second;
}

std::string ConfigMap::require_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required config key '" + key + "'");
    return it->second;
}

long long ConfigMap::parse_int(const std::string& key, const std::string& raw) const {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        auto it = lines_.find(key);
        throw ConfigError("key '" + key + "': expected integer, got '" + raw + "'",
                          it == lines_.end() ? 0 : it->second);
    }
}

double ConfigMap::parse_double(const std::string& key, const std::string& raw) const {
    try {
        std::size_t pos = 0;
        double v = std::stod(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        auto it = lines_.find(key);
        throw ConfigError("key '" + key + "': expected number, got '" + raw + "'",
                          it == lines_.end() ? 0 : it->second);
    }
}

long long ConfigMap::get_int(const std::string& key, long long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        note_default(key, std::to_string(fallback));
        return fallback;
    }
    return parse_int(key, it->second);
}

long long ConfigMap::require_int(const std::string& key) const { return parse_int(key, require_string(key)); }

double ConfigMap::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        std::ostringstream os;
        os << fallback;
        note_default(key, os.str());
        return fallback;
    }
    return parse_double(key, it->second);
}

double ConfigMap::require_double(const std::string& key) const { return parse_double(key, require_string(key)); }

std::vector<long long> ConfigMap::get_int_list(const std::string& key) const {
    std::vector<long long> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    for (const std::string& item : split_list(it->second)) out.push_back(parse_int(key, item));
    return out;
}

std::vector<double> ConfigMap::get_double_list(const std::string& key) const {
    std::vector<double> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    for (const std::string& item : split_list(it->second)) out.push_back(parse_double(key, item));
    return out;
}

std::vector<std::string> ConfigMap::get_string_list(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return {};
    return split_list(it->second);
}

void ConfigMap::require_known_keys(const std::vector<std::string>& known) const {
    for (const auto& [key, value] : values_) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            auto it = lines_.find(key);
            throw ConfigError("unknown config key '" + key + "'", it == lines_.end() ? 0 : it->second);
        }
    }
}

void ConfigMap::note_default(const std::string& key, const std::string& value) const {
    if (!values_.count(key)) defaults_[key] = value;
}

std::string ConfigMap::dump_effective() const {
    std::map<std::string, std::string> merged = defaults_;
    for (const auto& [k, v] : values_) merged[k] = v;
    std::string out;
    for (const auto& [k, v] : merged) out += k + "=" + v + "\n";
    return out;
}

void write_effective_config(const ConfigMap& cfg, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream os(out_dir / "effective_config.txt");
    if (!os) throw IoError("cannot write " + (out_dir / "effective_config.txt").string());
    os << cfg.dump_effective();
}

}  // namespace tsdlab
