#pragma once

// Flat experiment configs: a single [experiment] table of `key = value`
// lines in TOML syntax, restricted to strings, numbers, booleans and flat
// arrays of numbers or strings. Every key a subcommand does not consume is
// reported as an error by Config::finish().

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "lpp/error.hpp"

namespace lpp {

using ConfigValue = std::variant<bool, double, std::string, std::vector<double>, std::vector<std::string>>;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

//! Drops a trailing # comment that is not inside a string.
inline std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\'))
            in_str = !in_str;
        else if (s[i] == '#' && !in_str)
            return s.substr(0, i);
    }
    return s;
}

inline double parse_number(const std::string& text, const std::string& where) {
    std::string t;
    for (char c : text)
        if (c != '_')
            t.push_back(c);
    try {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size())
            throw ConfigError(where + ": trailing characters in number '" + text + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError(where + ": cannot parse value '" + text + "'");
    }
}

inline std::string parse_string(const std::string& text, const std::string& where) {
    if (text.size() < 2 || text.front() != '"' || text.back() != '"')
        throw ConfigError(where + ": malformed string " + text);
    std::string out;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
        if (text[i] == '\\' && i + 2 < text.size()) {
            const char c = text[++i];
            out.push_back(c == 'n' ? '\n' : c == 't' ? '\t' : c);
        } else {
            out.push_back(text[i]);
        }
    }
    return out;
}

inline std::vector<std::string> split_array(const std::string& body) {
    std::vector<std::string> items;
    std::string cur;
    bool in_str = false;
    for (char c : body) {
        if (c == '"')
            in_str = !in_str;
        if (c == ',' && !in_str) {
            items.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!trim(cur).empty())
        items.push_back(trim(cur));
    return items;
}

inline ConfigValue parse_value(const std::string& text, const std::string& where) {
    if (text.empty())
        throw ConfigError(where + ": missing value");
    if (text == "true")
        return true;
    if (text == "false")
        return false;
    if (text.front() == '"')
        return parse_string(text, where);
    if (text.front() == '[') {
        if (text.back() != ']')
            throw ConfigError(where + ": unterminated array");
        const auto items = split_array(text.substr(1, text.size() - 2));
        if (!items.empty() && items.front().front() == '"') {
            std::vector<std::string> out;
            for (const auto& it : items)
                out.push_back(parse_string(it, where));
            return out;
        }
        std::vector<double> out;
        for (const auto& it : items)
            out.push_back(parse_number(it, where));
        return out;
    }
    return parse_number(text, where);
}

} // namespace detail

class Config {
public:
    Config() = default;

    static Config parse(const std::string& text, const std::string& origin = "config") {
        Config c;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        bool in_table = false;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string where = origin + ":" + std::to_string(lineno);
            line = detail::trim(detail::strip_comment(line));
            if (line.empty())
                continue;
            if (line.front() == '[') {
                if (line != "[experiment]")
                    throw ConfigError(where + ": only an [experiment] table is supported, got " + line);
                in_table = true;
                continue;
            }
            if (!in_table)
                throw ConfigError(where + ": keys must appear inside the [experiment] table");
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(where + ": expected key = value");
            const std::string key = detail::trim(line.substr(0, eq));
            if (key.empty())
                throw ConfigError(where + ": empty key");
            if (c.values_.count(key))
                throw ConfigError(where + ": duplicate key '" + key + "'");
            c.values_[key] = detail::parse_value(detail::trim(line.substr(eq + 1)), where);
        }
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    //! Overrides (or adds) a key from its textual form, as given on the command line.
    void set(const std::string& key, const std::string& text) {
        std::string t = detail::trim(text);
        ConfigValue v;
        if (!t.empty() && (t.front() == '"' || t.front() == '[' || t == "true" || t == "false")) {
            v = detail::parse_value(t, "--" + key);
        } else if (t.find(',') != std::string::npos) {
            std::vector<double> nums;
            for (const auto& item : detail::split_array(t))
                nums.push_back(detail::parse_number(item, "--" + key));
            v = nums;
        } else {
            try {
                v = detail::parse_number(t, "--" + key);
            } catch (const ConfigError&) {
                v = t;
            }
        }
        values_[key] = std::move(v);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    double number(const std::string& key) {
        const auto& v = get(key);
        if (const double* d = std::get_if<double>(&v))
            return *d;
        throw ConfigError("key '" + key + "' must be a number");
    }
    double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    std::int64_t integer(const std::string& key) {
        const double d = number(key);
        if (d != static_cast<double>(static_cast<std::int64_t>(d)))
            throw ConfigError("key '" + key + "' must be an integer");
        return static_cast<std::int64_t>(d);
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback) { return has(key) ? integer(key) : fallback; }

    std::string string(const std::string& key) {
        const auto& v = get(key);
        if (const std::string* s = std::get_if<std::string>(&v))
            return *s;
        if (const double* d = std::get_if<double>(&v)) {
            std::ostringstream os;
            os << *d;
            return os.str();
        }
        throw ConfigError("key '" + key + "' must be a string");
    }
    std::string string(const std::string& key, const std::string& fallback) { return has(key) ? string(key) : fallback; }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key))
            return fallback;
        const auto& v = get(key);
        if (const bool* b = std::get_if<bool>(&v))
            return *b;
        throw ConfigError("key '" + key + "' must be true or false");
    }

    std::vector<double> numbers(const std::string& key) {
        const auto& v = get(key);
        if (const auto* a = std::get_if<std::vector<double>>(&v))
            return *a;
        if (const double* d = std::get_if<double>(&v))
            return {*d};
        throw ConfigError("key '" + key + "' must be a number or an array of numbers");
    }
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        return has(key) ? numbers(key) : fallback;
    }

    //! Throws if any key was never read.
    void finish() const {
        std::string unknown;
        for (const auto& [k, v] : values_)
            if (!used_.count(k))
                unknown += (unknown.empty() ? "" : ", ") + k;
        if (!unknown.empty())
            throw ConfigError("unknown config keys: " + unknown);
    }

    //! Canonical `key = value` text, sorted by key.
    std::string canonical() const {
        std::ostringstream os;
        os.precision(17);
        for (const auto& [k, v] : values_) {
            os << k << " = ";
            std::visit(
                [&](const auto& x) {
                    using T = std::decay_t<decltype(x)>;
                    if constexpr (std::is_same_v<T, bool>)
                        os << (x ? "true" : "false");
                    else if constexpr (std::is_same_v<T, double>)
                        os << x;
                    else if constexpr (std::is_same_v<T, std::string>)
                        os << '"' << x << '"';
                    else {
                        os << '[';
                        for (std::size_t i = 0; i < x.size(); ++i) {
                            if (i)
                                os << ", ";
                            if constexpr (std::is_same_v<T, std::vector<std::string>>)
                                os << '"' << x[i] << '"';
                            else
                                os << x[i];
                        }
                        os << ']';
                    }
                },
                v);
            os << '\n';
        }
        return os.str();
    }

    //! FNV-1a 64 of canonical().
    std::uint64_t hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : canonical()) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

private:
    const ConfigValue& get(const std::string& key) {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw ConfigError("missing required key '" + key + "'");
        used_.insert(key);
        return it->second;
    }

    std::map<std::string, ConfigValue> values_;
    std::set<std::string> used_;
};

} // namespace lpp
