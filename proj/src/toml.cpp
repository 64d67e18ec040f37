#include "fsi/toml.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

namespace fsi {

double TomlValue::number() const {
    if (!is_number()) throw ConfigError("expected a number");
    return std::get<double>(v);
}

bool TomlValue::boolean() const {
    if (!is_bool()) throw ConfigError("expected a boolean");
    return std::get<bool>(v);
}

const std::string& TomlValue::str() const {
    if (!is_string()) throw ConfigError("expected a string");
    return std::get<std::string>(v);
}

const std::vector<double>& TomlValue::array() const {
    if (!is_array()) throw ConfigError("expected an array");
    return std::get<std::vector<double>>(v);
}

namespace {

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

TomlValue parse_value(const std::string& raw, int line) {
    std::string s = strip(raw);
    if (s.empty()) throw ParseError("line " + std::to_string(line) + ": empty value");
    if (s == "true") return {true};
    if (s == "false") return {false};
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"')
            throw ParseError("line " + std::to_string(line) + ": unterminated string");
        return {s.substr(1, s.size() - 2)};
    }
    if (s.front() == '[') {
        if (s.back() != ']')
            throw ParseError("line " + std::to_string(line) + ": unterminated array");
        std::vector<double> arr;
        std::string body = s.substr(1, s.size() - 2);
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = strip(item);
            if (item.empty()) continue;
            std::size_t used = 0;
            double x = std::stod(item, &used);
            if (used != item.size())
                throw ParseError("line " + std::to_string(line) + ": bad array element");
            arr.push_back(x);
        }
        return {arr};
    }
    std::size_t used = 0;
    double x = std::stod(s, &used);
    if (used != s.size()) throw ParseError("line " + std::to_string(line) + ": bad value " + s);
    return {x};
}

} // namespace

TomlTable toml_parse(const std::string& text) {
    TomlTable out;
    std::stringstream ss(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            // keep # inside quoted strings
            bool in_str = false;
            for (std::size_t i = 0; i < line.size(); ++i) {
                if (line[i] == '"') in_str = !in_str;
                if (line[i] == '#' && !in_str) {
                    line = line.substr(0, i);
                    break;
                }
            }
        }
        line = strip(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("line " + std::to_string(line_no) + ": malformed section");
            section = strip(line.substr(1, line.size() - 2));
            out[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(line_no) + ": expected key = value");
        std::string key = strip(line.substr(0, eq));
        if (key.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty key");
        out[section][key] = parse_value(line.substr(eq + 1), line_no);
    }
    return out;
}

std::string toml_serialize(const TomlTable& t) {
    std::string out;
    char buf[64];
    for (const auto& [section, kv] : t) {
        if (!section.empty()) out += "[" + section + "]\n";
        for (const auto& [key, val] : kv) {
            out += key + " = ";
            if (val.is_bool()) {
                out += val.boolean() ? "true" : "false";
            } else if (val.is_string()) {
                out += "\"" + val.str() + "\"";
            } else if (val.is_array()) {
                out += "[";
                const auto& a = val.array();
                for (std::size_t i = 0; i < a.size(); ++i) {
                    std::snprintf(buf, sizeof buf, "%.17g", a[i]);
                    out += std::string(i ? ", " : "") + buf;
                }
                out += "]";
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", val.number());
                out += buf;
            }
            out += "\n";
        }
        out += "\n";
    }
    return out;
}

} // namespace fsi
