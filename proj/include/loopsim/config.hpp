#pragma once

#include <cctype>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "loopsim/errors.hpp"

namespace loopsim {

/// @brief Sectioned key = value text, UTF-8, one entry per line. '#' starts
/// a comment anywhere on a line. Keys live inside a [section]; duplicate
/// keys in one section are rejected so typos cannot silently hide a value.
/// Insertion order is preserved and serialization is canonical, so a parsed
/// and re-emitted file is stable byte for byte.
class Config {
  public:
    static Config parse(std::istream& in) {
        Config cfg;
        std::string line;
        size_t lineno = 0;
        std::string section;
        while (std::getline(in, line)) {
            ++lineno;
            const size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;

            if (t.front() == '[') {
                if (t.back() != ']')
                    throw invalid_config(where(lineno) + "unterminated section header");
                section = trim(t.substr(1, t.size() - 2));
                if (!valid_name(section))
                    throw invalid_config(where(lineno) + "invalid section name '" + section + "'");
                cfg.section_index(section); // created even if left empty
                continue;
            }

            const size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw invalid_config(where(lineno) + "expected 'key = value' or '[section]'");
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (!valid_name(key))
                throw invalid_config(where(lineno) + "invalid key name '" + key + "'");
            if (value.empty()) throw invalid_config(where(lineno) + "key '" + key + "' has no value");
            if (section.empty())
                throw invalid_config(where(lineno) + "key '" + key + "' appears outside a section");
            Section& sec = cfg.sections_[cfg.section_index(section)];
            for (const auto& kv : sec.entries)
                if (kv.first == key)
                    throw invalid_config(where(lineno) + "duplicate key '" + key +
                                         "' in section '" + section + "'");
            sec.entries.emplace_back(key, value);
        }
        return cfg;
    }

    static Config parse_string(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open config file: " + path);
        return parse(in);
    }

    bool has_section(const std::string& section) const { return find(section) != npos; }

    bool has(const std::string& section, const std::string& key) const {
        const size_t s = find(section);
        if (s == npos) return false;
        for (const auto& kv : sections_[s].entries)
            if (kv.first == key) return true;
        return false;
    }

    const std::string& get(const std::string& section, const std::string& key) const {
        const size_t s = find(section);
        if (s != npos)
            for (const auto& kv : sections_[s].entries)
                if (kv.first == key) return kv.second;
        throw invalid_config("config: missing key [" + section + "] " + key);
    }

    double get_double(const std::string& section, const std::string& key) const {
        const std::string& v = get(section, key);
        errno = 0;
        char* end = nullptr;
        const double d = std::strtod(v.c_str(), &end);
        if (end != v.c_str() + v.size() || errno == ERANGE)
            throw invalid_config("config: [" + section + "] " + key + " = '" + v +
                                 "' is not a number");
        return d;
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        return has(section, key) ? get_double(section, key) : fallback;
    }

    /// Unsigned integer; accepts decimal or 0x-prefixed hex.
    uint64_t get_uint(const std::string& section, const std::string& key) const {
        const std::string& v = get(section, key);
        if (!v.empty() && (v.front() == '-' || v.front() == '+'))
            throw invalid_config("config: [" + section + "] " + key + " = '" + v +
                                 "' is not an unsigned integer");
        errno = 0;
        char* end = nullptr;
        const unsigned long long u = std::strtoull(v.c_str(), &end, 0);
        if (end != v.c_str() + v.size() || errno == ERANGE)
            throw invalid_config("config: [" + section + "] " + key + " = '" + v +
                                 "' is not an unsigned integer");
        return u;
    }

    uint64_t get_uint(const std::string& section, const std::string& key, uint64_t fallback) const {
        return has(section, key) ? get_uint(section, key) : fallback;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        return has(section, key) ? get(section, key) : fallback;
    }

    void set(const std::string& section, const std::string& key, const std::string& value) {
        if (!valid_name(section) || !valid_name(key) || value.empty())
            throw invalid_config("config: invalid entry [" + section + "] " + key);
        Section& sec = sections_[section_index(section)];
        for (auto& kv : sec.entries)
            if (kv.first == key) {
                kv.second = value;
                return;
            }
        sec.entries.emplace_back(key, value);
    }

    /// Stored with 17 significant digits: strtod round-trips the exact bits.
    void set_double(const std::string& section, const std::string& key, double value) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", value);
        set(section, key, buf);
    }

    void set_uint(const std::string& section, const std::string& key, uint64_t value) {
        set(section, key, std::to_string(value));
    }

    std::vector<std::string> sections() const {
        std::vector<std::string> out;
        out.reserve(sections_.size());
        for (const Section& s : sections_) out.push_back(s.name);
        return out;
    }

    std::vector<std::string> keys(const std::string& section) const {
        std::vector<std::string> out;
        const size_t s = find(section);
        if (s != npos)
            for (const auto& kv : sections_[s].entries) out.push_back(kv.first);
        return out;
    }

    std::string serialize() const {
        std::string out;
        for (const Section& s : sections_) {
            if (!out.empty()) out += '\n';
            out += '[' + s.name + "]\n";
            for (const auto& kv : s.entries) out += kv.first + " = " + kv.second + '\n';
        }
        return out;
    }

    /// FNV-1a 64 over the canonical serialization: comments and formatting
    /// do not change the hash, values and their order do.
    uint64_t hash() const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : serialize()) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return h;
    }

  private:
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;
    };

    static constexpr size_t npos = static_cast<size_t>(-1);

    static std::string where(size_t lineno) {
        return "config line " + std::to_string(lineno) + ": ";
    }

    static std::string trim(const std::string& s) {
        size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    static bool valid_name(const std::string& s) {
        if (s.empty()) return false;
        for (char c : s)
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
                return false;
        return true;
    }

    size_t find(const std::string& section) const {
        for (size_t k = 0; k < sections_.size(); ++k)
            if (sections_[k].name == section) return k;
        return npos;
    }

    size_t section_index(const std::string& section) {
        const size_t k = find(section);
        if (k != npos) return k;
        sections_.push_back({section, {}});
        return sections_.size() - 1;
    }

    std::vector<Section> sections_;
};

} // namespace loopsim
