#include "fit/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "fit/errors.hpp"

namespace fit {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& src, int line, const std::string& msg) {
    throw ConfigError(src + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Strip a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

json parse_scalar(const std::string& raw, const std::string& src, int line);

json parse_value(const std::string& raw, const std::string& src, int line) {
    if (!raw.empty() && raw.front() == '[') {
        if (raw.back() != ']') fail(src, line, "array must close on the same line");
        json arr = json::array();
        std::string body = raw.substr(1, raw.size() - 2);
        int depth = 0;
        bool quoted = false;
        std::string cur;
        auto flush = [&] {
            const std::string t = trim(cur);
            if (!t.empty()) arr.push_back(parse_value(t, src, line));
            cur.clear();
        };
        for (char c : body) {
            if (c == '"') quoted = !quoted;
            if (!quoted) {
                if (c == '[') ++depth;
                if (c == ']') --depth;
                if (c == ',' && depth == 0) {
                    flush();
                    continue;
                }
            }
            cur += c;
        }
        if (depth != 0 || quoted) fail(src, line, "unbalanced array");
        flush();
        return arr;
    }
    return parse_scalar(raw, src, line);
}

json parse_scalar(const std::string& raw, const std::string& src, int line) {
    if (raw.empty()) fail(src, line, "missing value");
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"') fail(src, line, "unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
            if (raw[i] == '\\' && i + 2 < raw.size()) {
                const char n = raw[++i];
                if (n == 'n') out += '\n';
                else if (n == 't') out += '\t';
                else out += n;
            } else {
                out += raw[i];
            }
        }
        return out;
    }
    if (raw == "true") return true;
    if (raw == "false") return false;

    const char* first = raw.data();
    const char* last = raw.data() + raw.size();
    if (raw.find_first_of(".eE") == std::string::npos) {
        long long iv = 0;
        auto [p, ec] = std::from_chars(first, last, iv);
        if (ec == std::errc() && p == last) return iv;
    }
    double dv = 0;
    auto [p, ec] = std::from_chars(first, last, dv);
    if (ec == std::errc() && p == last) return dv;
    fail(src, line, "cannot parse value '" + raw + "'");
}

} // namespace

json parse_toml(const std::string& text, const std::string& source_name) {
    json root = json::object();
    json* table = &root;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(strip_comment(line));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(source_name, lineno, "unterminated table header");
            const std::string path = trim(s.substr(1, s.size() - 2));
            if (path.empty()) fail(source_name, lineno, "empty table name");
            table = &root;
            std::size_t start = 0;
            while (true) {
                const std::size_t dot = path.find('.', start);
                const std::string part = trim(path.substr(start, dot - start));
                if (part.empty()) fail(source_name, lineno, "empty table name component");
                table = &(*table)[part];
                if (!table->is_object() && !table->is_null())
                    fail(source_name, lineno, "table redefines a value");
                if (dot == std::string::npos) break;
                start = dot + 1;
            }
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) fail(source_name, lineno, "expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) fail(source_name, lineno, "empty key");
        if (table->contains(key)) fail(source_name, lineno, "duplicate key '" + key + "'");
        (*table)[key] = parse_value(value, source_name, lineno);
    }
    return root;
}

json load_config_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    const std::string text = buf.str();
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        try {
            return json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }
    return parse_toml(text, path);
}

} // namespace fit
