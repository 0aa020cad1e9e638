#pragma once

#include <map>
#include <string>
#include <string_view>

#include "voiceclone/io.hpp"

namespace voiceclone {

// Parsed TOML document. Only the subset used by our config files is
// supported: [table] headers, bare or quoted keys, basic and literal strings,
// integers, floats, booleans, arrays (may span lines) and inline tables.
struct TomlDocument {
    Json root = Json::object();
    // "table.key" -> 1-based line of the definition, for error locations.
    std::map<std::string, int> lines;

    int line_of(const std::string& dotted_key) const {
        auto it = lines.find(dotted_key);
        return it == lines.end() ? 0 : it->second;
    }
};

// Throws ValidationError("<name>:<line>: ...") on malformed input.
TomlDocument parse_toml(std::string_view text, std::string_view name = "config");

}  // namespace voiceclone
