#include "voiceclone/toml.hpp"

#include <cctype>
#include <charconv>

#include "voiceclone/error.hpp"

namespace voiceclone {
namespace {

class Parser {
public:
    Parser(std::string_view text, std::string_view name) : text_(text), name_(name) {}

    TomlDocument run() {
        TomlDocument doc;
        Json* table = &doc.root;
        std::string prefix;
        for (;;) {
            skip_ws_comments_newlines();
            if (eof()) {
                break;
            }
            if (peek() == '[') {
                const int header_line = line_;
                ++pos_;
                if (!eof() && peek() == '[') {
                    fail("arrays of tables are not supported");
                }
                skip_inline_ws();
                std::string header = parse_key();
                skip_inline_ws();
                expect(']');
                end_of_line();
                if (doc.root.contains(header)) {
                    fail_at(header_line, "duplicate table [" + header + "]");
                }
                doc.root[header] = Json::object();
                doc.lines[header] = header_line;
                table = &doc.root[header];
                prefix = header + ".";
                continue;
            }
            const int key_line = line_;
            std::string key = parse_key();
            skip_inline_ws();
            expect('=');
            skip_inline_ws();
            Json value = parse_value();
            end_of_line();
            if (table->contains(key)) {
                fail_at(key_line, "duplicate key '" + prefix + key + "'");
            }
            (*table)[key] = std::move(value);
            doc.lines[prefix + key] = key_line;
        }
        return doc;
    }

private:
    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }

    [[noreturn]] void fail(const std::string& msg) const { fail_at(line_, msg); }

    [[noreturn]] void fail_at(int line, const std::string& msg) const {
        throw ValidationError(std::string(name_) + ":" + std::to_string(line) + ": " + msg);
    }

    void expect(char c) {
        if (eof() || peek() != c) {
            fail(std::string("expected '") + c + "'");
        }
        ++pos_;
    }

    void skip_inline_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) {
            ++pos_;
        }
    }

    void skip_comment() {
        if (!eof() && peek() == '#') {
            while (!eof() && peek() != '\n') {
                ++pos_;
            }
        }
    }

    void skip_ws_comments_newlines() {
        for (;;) {
            skip_inline_ws();
            skip_comment();
            if (eof()) {
                return;
            }
            if (peek() == '\r') {
                ++pos_;
                continue;
            }
            if (peek() == '\n') {
                ++pos_;
                ++line_;
                continue;
            }
            return;
        }
    }

    void end_of_line() {
        skip_inline_ws();
        skip_comment();
        if (eof()) {
            return;
        }
        if (peek() == '\r') {
            ++pos_;
        }
        if (eof() || peek() != '\n') {
            fail("unexpected trailing characters");
        }
        ++pos_;
        ++line_;
    }

    std::string parse_key() {
        if (eof()) {
            fail("expected key");
        }
        if (peek() == '"') {
            return parse_basic_string();
        }
        if (peek() == '\'') {
            return parse_literal_string();
        }
        std::string key;
        while (!eof()) {
            const char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
                key.push_back(c);
                ++pos_;
            } else {
                break;
            }
        }
        if (key.empty()) {
            fail("expected key");
        }
        if (!eof() && peek() == '.') {
            fail("dotted keys are not supported");
        }
        return key;
    }

    std::string parse_basic_string() {
        expect('"');
        std::string out;
        for (;;) {
            if (eof() || peek() == '\n') {
                fail("unterminated string");
            }
            char c = text_[pos_++];
            if (c == '"') {
                return out;
            }
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (eof()) {
                fail("unterminated escape");
            }
            c = text_[pos_++];
            switch (c) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case 'u': append_unicode(out, 4); break;
                case 'U': append_unicode(out, 8); break;
                default: fail(std::string("invalid escape \\") + c);
            }
        }
    }

    void append_unicode(std::string& out, int digits) {
        if (pos_ + static_cast<std::size_t>(digits) > text_.size()) {
            fail("truncated unicode escape");
        }
        std::uint32_t cp = 0;
        auto first = text_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, first + digits, cp, 16);
        if (ec != std::errc() || ptr != first + digits) {
            fail("invalid unicode escape");
        }
        pos_ += static_cast<std::size_t>(digits);
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }

    std::string parse_literal_string() {
        expect('\'');
        std::string out;
        for (;;) {
            if (eof() || peek() == '\n') {
                fail("unterminated string");
            }
            const char c = text_[pos_++];
            if (c == '\'') {
                return out;
            }
            out.push_back(c);
        }
    }

    Json parse_value() {
        if (eof()) {
            fail("expected value");
        }
        const char c = peek();
        if (c == '"') {
            return parse_basic_string();
        }
        if (c == '\'') {
            return parse_literal_string();
        }
        if (c == '[') {
            return parse_array();
        }
        if (c == '{') {
            return parse_inline_table();
        }
        if (text_.substr(pos_, 4) == "true") {
            pos_ += 4;
            return true;
        }
        if (text_.substr(pos_, 5) == "false") {
            pos_ += 5;
            return false;
        }
        return parse_number();
    }

    Json parse_number() {
        std::string token;
        while (!eof()) {
            const char c = peek();
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' ||
                c == 'e' || c == 'E' || c == '_') {
                if (c != '_') {
                    token.push_back(c);
                }
                ++pos_;
            } else {
                break;
            }
        }
        if (token.empty()) {
            fail("expected value");
        }
        const bool is_float = token.find_first_of(".eE") != std::string::npos;
        const char* first = token.data() + (token.front() == '+' ? 1 : 0);
        const char* last = token.data() + token.size();
        if (is_float) {
            double value = 0;
            auto [ptr, ec] = std::from_chars(first, last, value);
            if (ec != std::errc() || ptr != last) {
                fail("invalid number '" + token + "'");
            }
            return value;
        }
        std::int64_t value = 0;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) {
            fail("invalid number '" + token + "'");
        }
        return value;
    }

    Json parse_array() {
        expect('[');
        Json arr = Json::array();
        for (;;) {
            skip_ws_comments_newlines();
            if (eof()) {
                fail("unterminated array");
            }
            if (peek() == ']') {
                ++pos_;
                return arr;
            }
            arr.push_back(parse_value());
            skip_ws_comments_newlines();
            if (!eof() && peek() == ',') {
                ++pos_;
                continue;
            }
            skip_ws_comments_newlines();
            expect(']');
            return arr;
        }
    }

    Json parse_inline_table() {
        expect('{');
        Json table = Json::object();
        skip_inline_ws();
        if (!eof() && peek() == '}') {
            ++pos_;
            return table;
        }
        for (;;) {
            skip_inline_ws();
            std::string key = parse_key();
            skip_inline_ws();
            expect('=');
            skip_inline_ws();
            if (table.contains(key)) {
                fail("duplicate key '" + key + "' in inline table");
            }
            table[key] = parse_value();
            skip_inline_ws();
            if (!eof() && peek() == ',') {
                ++pos_;
                continue;
            }
            expect('}');
            return table;
        }
    }

    std::string_view text_;
    std::string_view name_;
    std::size_t pos_ = 0;
    int line_ = 1;
};

}  // namespace

TomlDocument parse_toml(std::string_view text, std::string_view name) {
    return Parser(text, name).run();
}

}  // namespace voiceclone
