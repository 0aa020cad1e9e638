#include "voiceclone/text.hpp"

#include <algorithm>
#include <cctype>

namespace voiceclone::text {

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && to_lower(s.substr(0, prefix.size())) == to_lower(prefix);
}

bool contains_word(std::string_view haystack, std::string_view phrase) {
    const std::string h = to_lower(haystack);
    const std::string p = to_lower(phrase);
    if (p.empty()) {
        return false;
    }
    for (std::size_t pos = h.find(p); pos != std::string::npos; pos = h.find(p, pos + 1)) {
        const bool left_ok = pos == 0 || !is_alnum(h[pos - 1]);
        const std::size_t end = pos + p.size();
        const bool right_ok = end >= h.size() || !is_alnum(h[end]);
        if (left_ok && right_ok) {
            return true;
        }
    }
    return false;
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (is_alnum(c)) {
            cur.push_back(lower(c));
        } else if (c == '\'' && !cur.empty() && i + 1 < s.size() && is_alnum(s[i + 1])) {
            continue;
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        out.push_back(std::move(cur));
    }
    return out;
}

std::vector<std::string> sentences(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if ((c == '.' || c == '!' || c == '?') && (i + 1 == s.size() || is_space(s[i + 1]))) {
            std::string piece = trim(s.substr(start, i + 1 - start));
            if (!piece.empty()) {
                out.push_back(std::move(piece));
            }
            start = i + 1;
        }
    }
    std::string tail = trim(s.substr(std::min(start, s.size())));
    if (!tail.empty()) {
        out.push_back(std::move(tail));
    }
    return out;
}

std::string as_sentence(std::string_view s) {
    std::string out = trim(s);
    if (out.empty()) {
        return out;
    }
    std::size_t last = out.size() - 1;
    if (out[last] == '"' && last > 0) {
        --last;
    }
    if (out[last] != '.' && out[last] != '!' && out[last] != '?') {
        out.push_back('.');
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

}  // namespace voiceclone::text
