#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small ASCII-oriented text helpers. Non-ASCII bytes pass through untouched.
namespace voiceclone::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);
bool starts_with_ci(std::string_view s, std::string_view prefix);

// Case-insensitive match of `phrase` bounded by non-alphanumeric characters.
bool contains_word(std::string_view haystack, std::string_view phrase);

// Lower-cased alphanumeric tokens; punctuation separates tokens, except that
// an apostrophe inside a word is dropped ("customer's" -> "customers").
std::vector<std::string> words(std::string_view s);

// Splits on '.', '!' or '?' followed by whitespace or end of text. Keeps the
// terminator; trims whitespace.
std::vector<std::string> sentences(std::string_view s);

// Ensures the text ends in '.', '!' or '?'.
std::string as_sentence(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace voiceclone::text
