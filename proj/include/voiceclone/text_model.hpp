#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "voiceclone/corpus.hpp"

namespace voiceclone {

// Backend used by the extraction steps. Given an instruction and a batch of
// transcripts it returns a structured (JSON) text answer. The instruction's
// first line names the task ("TASK: job_description", "TASK: knowledge",
// "TASK: example_dialogues"); the rest is the natural-language prompt a real
// model would receive.
class TextModelAdapter {
public:
    virtual ~TextModelAdapter() = default;

    virtual std::string name() const = 0;

    // Throws AdapterError on backend failure.
    virtual std::string complete(std::string_view instruction,
                                 std::span<const CallRecord> transcripts) = 0;

    // True when complete() may be called from several threads at once.
    virtual bool concurrent_safe() const { return false; }
};

std::string job_description_instruction();
std::string knowledge_instruction(std::string_view topic);
std::string dialogue_instruction();

// Deterministic keyword and frequency heuristics standing in for a language
// model. A pure function of (instruction, transcripts, seed).
class MockExtractor final : public TextModelAdapter {
public:
    explicit MockExtractor(std::uint64_t seed = 0) : seed_(seed) {}

    std::string name() const override { return "mock"; }
    std::string complete(std::string_view instruction,
                         std::span<const CallRecord> transcripts) override;
    bool concurrent_safe() const override { return true; }

    // Canonical objection label for a customer utterance, or empty.
    static std::string classify_objection(std::string_view utterance);

private:
    std::uint64_t seed_;
};

// Connector settings for a hosted model. Configuration only: this build does
// not open network connections, so complete() always fails retriably.
struct ExternalModelConfig {
    std::string url;      // VC_UPSTREAM_URL
    std::string api_key;  // VC_UPSTREAM_KEY

    static ExternalModelConfig from_env();
    bool configured() const { return !url.empty() && !api_key.empty(); }
};

class ExternalTextModel final : public TextModelAdapter {
public:
    explicit ExternalTextModel(ExternalModelConfig config) : config_(std::move(config)) {}

    std::string name() const override { return "external"; }
    std::string complete(std::string_view instruction,
                         std::span<const CallRecord> transcripts) override;

private:
    ExternalModelConfig config_;
};

std::unique_ptr<TextModelAdapter> make_text_model(std::string_view kind, std::uint64_t seed);

}  // namespace voiceclone
