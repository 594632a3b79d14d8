#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dayahead/error.hpp"
#include "dayahead/ingest.hpp"

namespace dayahead {

/// INI-style configuration: `[section]` headers, `key = value` lines, `#` or
/// `;` comments. Keys are addressed as "section.key". Reads are tracked so a
/// caller can reject keys that nothing consumed (usually typos).
class Config {
public:
    static Config parse(std::istream& in, const std::string& origin = "<config>") {
        Config cfg;
        cfg.origin_ = origin;
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const std::string_view trimmed = trim(line);
            if (trimmed.empty() || trimmed[0] == '#' || trimmed[0] == ';') continue;
            if (trimmed.front() == '[') {
                if (trimmed.back() != ']')
                    throw DataError(detail::concat(origin, ":", lineno, ": unterminated section"));
                section = std::string(trim(trimmed.substr(1, trimmed.size() - 2)));
                if (section.empty())
                    throw DataError(detail::concat(origin, ":", lineno, ": empty section name"));
                continue;
            }
            const auto eq = trimmed.find('=');
            if (eq == std::string_view::npos)
                throw DataError(detail::concat(origin, ":", lineno, ": expected key = value"));
            const std::string key = std::string(trim(trimmed.substr(0, eq)));
            if (key.empty())
                throw DataError(detail::concat(origin, ":", lineno, ": empty key"));
            const std::string full = section.empty() ? key : section + "." + key;
            if (cfg.values_.count(full))
                throw DataError(detail::concat(origin, ":", lineno, ": duplicate key '", full,
                                               "'"));
            cfg.values_[full] = std::string(trim(trimmed.substr(eq + 1)));
        }
        return cfg;
    }

    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open config file: " + path);
        return parse(in, path);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        accessed_.insert(key);
        return it->second;
    }

    std::string require_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw DataError(detail::concat(origin_, ": missing required key '", key, "'"));
        accessed_.insert(key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        accessed_.insert(key);
        double v = 0.0;
        if (!detail::parse_double(it->second, v))
            throw DataError(detail::concat(origin_, ": key '", key, "': bad number '",
                                           it->second, "'"));
        return v;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        accessed_.insert(key);
        return parse_u64(key, it->second);
    }

    std::size_t get_size(const std::string& key, std::size_t fallback) const {
        return std::size_t(get_u64(key, fallback));
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        accessed_.insert(key);
        const std::string& v = it->second;
        if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
        if (v == "false" || v == "no" || v == "off" || v == "0") return false;
        throw DataError(detail::concat(origin_, ": key '", key, "': bad boolean '", v, "'"));
    }

    std::vector<double> get_double_list(const std::string& key,
                                        std::vector<double> fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        accessed_.insert(key);
        std::vector<double> out;
        for (const std::string& item : split_list(it->second)) {
            double v = 0.0;
            if (!detail::parse_double(item, v))
                throw DataError(detail::concat(origin_, ": key '", key, "': bad number '", item,
                                               "'"));
            out.push_back(v);
        }
        return out;
    }

    std::vector<std::size_t> get_size_list(const std::string& key,
                                           std::vector<std::size_t> fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        accessed_.insert(key);
        std::vector<std::size_t> out;
        for (const std::string& item : split_list(it->second))
            out.push_back(std::size_t(parse_u64(key, item)));
        return out;
    }

    std::vector<std::string> get_string_list(const std::string& key,
                                             std::vector<std::string> fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        accessed_.insert(key);
        return split_list(it->second);
    }

    /// Keys present in the file that no getter touched.
    std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [key, value] : values_)
            if (!accessed_.count(key)) out.push_back(key);
        return out;
    }

    const std::string& origin() const { return origin_; }

private:
    static std::string_view trim(std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
        return s;
    }

    static std::vector<std::string> split_list(std::string_view s) {
        std::vector<std::string> out;
        std::size_t start = 0;
        while (start <= s.size()) {
            std::size_t comma = s.find(',', start);
            if (comma == std::string_view::npos) comma = s.size();
            const std::string_view item = trim(s.substr(start, comma - start));
            if (!item.empty()) out.emplace_back(item);
            start = comma + 1;
        }
        return out;
    }

    std::uint64_t parse_u64(const std::string& key, const std::string& text) const {
        std::uint64_t v = 0;
        const char* begin = text.data();
        const char* end = begin + text.size();
        const auto res = std::from_chars(begin, end, v);
        if (res.ec != std::errc{} || res.ptr != end)
            throw DataError(detail::concat(origin_, ": key '", key, "': bad count '", text, "'"));
        return v;
    }

    std::string origin_;
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> accessed_;
};

}  // namespace dayahead
