#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "occlumask/error.hpp"

namespace occlumask {

/// Flat key=value configuration with dotted section prefixes
/// (`radiometry.t_max = 0.1`). `#` starts a comment; blank lines are ignored.
/// Later assignments override earlier ones.
class Config {
public:
    static Config parse(std::string_view text) {
        Config cfg;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t nl = text.find('\n', pos);
            std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
            pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++line_no;
            if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
            auto key = trim(line.substr(0, eq));
            auto value = trim(line.substr(eq + 1));
            if (key.empty()) throw UsageError("config line " + std::to_string(line_no) + ": empty key");
            cfg.values_[std::string(key)] = std::string(value);
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open config " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    /// Fills in `key` only when absent.
    void set_default(const std::string& key, std::string value) { values_.try_emplace(key, std::move(value)); }

    std::string get_string(const std::string& key, const std::string& fallback = {}) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string require_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw UsageError("missing required config key " + key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        return has(key) ? to_double(key, values_.at(key)) : fallback;
    }

    double require_double(const std::string& key) const { return to_double(key, require_string(key)); }

    int get_int(const std::string& key, int fallback) const {
        if (!has(key)) return fallback;
        const std::string& v = values_.at(key);
        int out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || p != v.data() + v.size())
            throw UsageError("config key " + key + ": expected integer, got '" + v + "'");
        return out;
    }

    bool get_bool(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string& v = values_.at(key);
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw UsageError("config key " + key + ": expected boolean, got '" + v + "'");
    }

    /// Canonical text form; parse(dump()) reproduces the same key set.
    std::string dump() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

    friend bool operator==(const Config&, const Config&) = default;

private:
    static std::string_view trim(std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
        return s;
    }

    static double to_double(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            double d = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw UsageError("config key " + key + ": expected number, got '" + v + "'");
        }
    }

    std::map<std::string, std::string> values_;
};

}  // namespace occlumask
