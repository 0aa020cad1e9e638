#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace voiceclone {

using Json = nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Same as write_text_file but the file is created with owner-only permissions.
void write_private_file(const std::filesystem::path& path, std::string_view text);

// Sorted keys, two-space indent, LF endings, trailing newline.
std::string canonical_json(const Json& value);

Json parse_json_file(const std::filesystem::path& path);

}  // namespace voiceclone
