#include "voiceclone/io.hpp"

#include <fstream>
#include <sstream>

#include "voiceclone/error.hpp"

namespace voiceclone {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read file: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw Error("read failed: " + path.string());
    }
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write file: " + path.string());
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw Error("write failed: " + path.string());
    }
}

void write_private_file(const std::filesystem::path& path, std::string_view text) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    // Create empty and restrict before any content lands on disk.
    { std::ofstream touch(path, std::ios::binary | std::ios::trunc); }
    fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write,
                    fs::perm_options::replace);
    write_text_file(path, text);
}

std::string canonical_json(const Json& value) {
    std::string out = value.dump(2);
    out.push_back('\n');
    return out;
}

Json parse_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ValidationError(path.string() + ": invalid JSON: " + e.what());
    }
}

}  // namespace voiceclone
