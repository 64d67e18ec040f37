#ifndef FSI_TOML_HPP
#define FSI_TOML_HPP

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "fsi/core.hpp"

namespace fsi {

/// Minimal TOML subset used by scenario configs: [sections], key = value
/// with numbers, booleans, quoted strings, and flat arrays of numbers.
struct TomlValue {
    std::variant<double, bool, std::string, std::vector<double>> v;

    bool is_number() const { return std::holds_alternative<double>(v); }
    bool is_bool() const { return std::holds_alternative<bool>(v); }
    bool is_string() const { return std::holds_alternative<std::string>(v); }
    bool is_array() const { return std::holds_alternative<std::vector<double>>(v); }

    double number() const;
    bool boolean() const;
    const std::string& str() const;
    const std::vector<double>& array() const;
};

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

TomlTable toml_parse(const std::string& text);
std::string toml_serialize(const TomlTable& t);

} // namespace fsi

#endif
