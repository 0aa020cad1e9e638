#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "voiceclone/cloning.hpp"
#include "voiceclone/gateway.hpp"

namespace voiceclone {

struct EvaluationSettings {
    std::filesystem::path rubric = "data/rubric.json";
    double flag_threshold = 0.5;
    std::uint64_t blind_seed = 42;
};

// Relative paths are used as given, i.e. relative to the working directory.
struct AppConfig {
    std::filesystem::path corpus = "fixtures/corpus.jsonl";
    std::filesystem::path output_dir = "out";
    CloneConfig clone;
    GatewayConfig gateway;
    EvaluationSettings evaluation;
};

// Throws ValidationError("<name>:<line>: ...") on unknown keys, wrong types
// or out-of-range values.
AppConfig parse_config(std::string_view toml, std::string_view name = "config");
AppConfig load_config(const std::filesystem::path& path);

}  // namespace voiceclone
