#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "voiceclone/audio.hpp"
#include "voiceclone/io.hpp"

namespace voiceclone {

struct AdapterEvent {
    enum class Kind { audio_delta, transcript_delta, turn_complete, error, session_end };

    Kind kind = Kind::turn_complete;
    Pcm audio;         // audio_delta
    std::string text;  // transcript_delta, error, session_end reason

    static AdapterEvent audio_delta(Pcm pcm) { return {Kind::audio_delta, std::move(pcm), {}}; }
    static AdapterEvent transcript(std::string t) { return {Kind::transcript_delta, {}, std::move(t)}; }
    static AdapterEvent turn_done() { return {Kind::turn_complete, {}, {}}; }
    static AdapterEvent failure(std::string t) { return {Kind::error, {}, std::move(t)}; }
    static AdapterEvent end(std::string reason) { return {Kind::session_end, {}, std::move(reason)}; }

    friend bool operator==(const AdapterEvent&, const AdapterEvent&) = default;
};

std::string_view to_string(AdapterEvent::Kind k);

struct SessionContext {
    std::string playbook_id;
    std::string system_prompt;  // rendered playbook
};

// Speech-to-speech backend behind a gateway session. Calls come from one
// session at a time and never overlap. Each call returns the events it
// produced, in emission order.
class SpeechAdapter {
public:
    virtual ~SpeechAdapter() = default;

    virtual std::string name() const = 0;

    // Throws AdapterError when the backend cannot start.
    virtual std::vector<AdapterEvent> open(const SessionContext& context) = 0;
    virtual std::vector<AdapterEvent> on_audio(const Pcm& pcm) = 0;
    virtual std::vector<AdapterEvent> on_audio_end() = 0;
    virtual void on_barge_in() {}
};

// ---- echo -------------------------------------------------------------------

class EchoAdapter final : public SpeechAdapter {
public:
    explicit EchoAdapter(std::chrono::milliseconds processing_delay = std::chrono::milliseconds(50))
        : delay_(processing_delay) {}

    std::string name() const override { return "echo"; }
    std::vector<AdapterEvent> open(const SessionContext& context) override;
    std::vector<AdapterEvent> on_audio(const Pcm& pcm) override;
    std::vector<AdapterEvent> on_audio_end() override;

    const std::string& system_prompt() const { return prompt_; }

private:
    std::chrono::milliseconds delay_;
    std::string prompt_;
};

// ---- scripted -----------------------------------------------------------------

enum class Trigger { on_session_start, on_turn_complete };

struct SyntheticPcm {
    double frequency_hz = 200.0;
    std::size_t frames = 0;  // zero: one frame per word

    friend bool operator==(const SyntheticPcm&, const SyntheticPcm&) = default;
};

struct CustomerTurn {
    Trigger trigger = Trigger::on_turn_complete;
    std::string text;
    std::optional<SyntheticPcm> synthetic_pcm;

    friend bool operator==(const CustomerTurn&, const CustomerTurn&) = default;
};

struct AgentLine {
    std::string text;
    std::size_t audio_frames = 0;  // zero: one frame per word

    friend bool operator==(const AgentLine&, const AgentLine&) = default;
};

struct ScenarioScript {
    std::string scenario_id;  // happy_path | negotiation | complaining
    std::string description;
    std::vector<CustomerTurn> customer_turns;
    std::vector<AgentLine> agent_turns;
    std::vector<std::string> expected_agent_behaviors;

    // The agent speaks first unless the first customer turn fires at session start.
    bool agent_opens() const;

    friend bool operator==(const ScenarioScript&, const ScenarioScript&) = default;
};

inline constexpr std::array<std::string_view, 3> kScenarioIds = {"happy_path", "negotiation", "complaining"};

// Throws ValidationError naming the offending field.
ScenarioScript scenario_from_json(const Json& j);
Json to_json(const ScenarioScript& s);
ScenarioScript load_scenario(const std::filesystem::path& path);

struct ScriptedLine {
    bool agent = false;
    std::string text;
};

// The conversation a scripted session produces: agent and customer lines
// alternate, starting per agent_opens(), until either side runs out.
std::vector<ScriptedLine> script_interleaving(const ScenarioScript& s);

// Customer audio for a scripted turn.
Pcm customer_pcm(const CustomerTurn& turn);

// Events for agent step `step`: one transcript delta per sentence (deltas
// concatenate to the line), each followed by its tone audio in 640-byte
// deltas, then turn_complete. Past the last step: turn_complete and
// session_end.
std::vector<AdapterEvent> scripted_next(const ScenarioScript& s, std::size_t step);

class ScriptedAdapter final : public SpeechAdapter {
public:
    explicit ScriptedAdapter(ScenarioScript script,
                             std::chrono::milliseconds processing_delay = std::chrono::milliseconds(50))
        : script_(std::move(script)), delay_(processing_delay) {}

    std::string name() const override { return "scripted"; }
    std::vector<AdapterEvent> open(const SessionContext& context) override;
    std::vector<AdapterEvent> on_audio(const Pcm& pcm) override;
    std::vector<AdapterEvent> on_audio_end() override;

    std::size_t steps_taken() const { return step_; }

private:
    std::vector<AdapterEvent> advance();

    ScenarioScript script_;
    std::chrono::milliseconds delay_;
    std::size_t step_ = 0;
};

// ---- external connector -------------------------------------------------------

struct ExternalSpeechConfig {
    std::string url;      // VC_UPSTREAM_URL
    std::string api_key;  // VC_UPSTREAM_KEY

    static ExternalSpeechConfig from_env();
    bool configured() const { return !url.empty() && !api_key.empty(); }
};

// Connection state machine for a hosted realtime speech service. This build
// carries no upstream transport, so open() always ends in `failed`.
class ExternalSpeechAdapter final : public SpeechAdapter {
public:
    enum class State { disconnected, connecting, connected, failed };

    explicit ExternalSpeechAdapter(ExternalSpeechConfig config) : config_(std::move(config)) {}

    std::string name() const override { return "external"; }
    std::vector<AdapterEvent> open(const SessionContext& context) override;
    std::vector<AdapterEvent> on_audio(const Pcm& pcm) override;
    std::vector<AdapterEvent> on_audio_end() override;

    State state() const { return state_; }

private:
    ExternalSpeechConfig config_;
    State state_ = State::disconnected;
};

std::string_view to_string(ExternalSpeechAdapter::State s);

}  // namespace voiceclone
