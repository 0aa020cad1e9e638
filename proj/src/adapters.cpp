#include "voiceclone/adapters.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <thread>

#include "voiceclone/error.hpp"
#include "voiceclone/text.hpp"

namespace voiceclone {

std::string_view to_string(AdapterEvent::Kind k) {
    switch (k) {
        case AdapterEvent::Kind::audio_delta: return "audio_delta";
        case AdapterEvent::Kind::transcript_delta: return "transcript_delta";
        case AdapterEvent::Kind::turn_complete: return "turn_complete";
        case AdapterEvent::Kind::error: return "error";
        case AdapterEvent::Kind::session_end: return "session_end";
    }
    return "?";
}

// ---- echo -------------------------------------------------------------------

std::vector<AdapterEvent> EchoAdapter::open(const SessionContext& context) {
    prompt_ = context.system_prompt;
    return {};
}

std::vector<AdapterEvent> EchoAdapter::on_audio(const Pcm& pcm) {
    return {AdapterEvent::audio_delta(pcm)};
}

std::vector<AdapterEvent> EchoAdapter::on_audio_end() {
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    return {AdapterEvent::turn_done()};
}

// ---- scenario scripts -----------------------------------------------------------

bool ScenarioScript::agent_opens() const {
    return customer_turns.empty() || customer_turns.front().trigger == Trigger::on_turn_complete;
}

namespace {

std::string str_field(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_string()) {
        throw ValidationError(where + key + ": expected a string");
    }
    return j.at(key).get<std::string>();
}

std::size_t frames_field(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) return 0;
    const Json& v = j.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1 ||
        v.get<std::int64_t>() * static_cast<std::int64_t>(kFrameBytes) > 1 << 24) {
        throw ValidationError(where + key + ": expected a positive frame count");
    }
    return v.get<std::size_t>();
}

bool single_spaced(const std::string& text) {
    return text == text::join(text::sentences(text), " ");
}

}  // namespace

ScenarioScript scenario_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("scenario: expected an object");
    static const std::set<std::string> known = {"scenario_id", "description", "customer_turns", "agent_turns",
                                                "expected_agent_behaviors"};
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw ValidationError("scenario: unknown key '" + key + "'");
    }
    ScenarioScript s;
    s.scenario_id = str_field(j, "scenario_id", "");
    if (std::find(kScenarioIds.begin(), kScenarioIds.end(), s.scenario_id) == kScenarioIds.end()) {
        throw ValidationError("scenario_id: unknown scenario '" + s.scenario_id + "'");
    }
    if (j.contains("description")) s.description = str_field(j, "description", "");

    if (!j.contains("customer_turns") || !j.at("customer_turns").is_array() || j.at("customer_turns").empty()) {
        throw ValidationError("customer_turns: expected a non-empty array");
    }
    for (std::size_t i = 0; i < j.at("customer_turns").size(); ++i) {
        const Json& t = j.at("customer_turns")[i];
        const std::string where = "customer_turns[" + std::to_string(i) + "].";
        if (!t.is_object()) throw ValidationError(where.substr(0, where.size() - 1) + ": expected an object");
        CustomerTurn turn;
        const std::string trigger = str_field(t, "trigger", where);
        if (trigger == "on_session_start") {
            if (i != 0) throw ValidationError(where + "trigger: only the first turn may fire at session start");
            turn.trigger = Trigger::on_session_start;
        } else if (trigger == "on_turn_complete") {
            turn.trigger = Trigger::on_turn_complete;
        } else {
            throw ValidationError(where + "trigger: unknown trigger '" + trigger + "'");
        }
        turn.text = str_field(t, "text", where);
        if (text::trim(turn.text).empty()) throw ValidationError(where + "text: empty");
        if (t.contains("synthetic_pcm")) {
            const Json& p = t.at("synthetic_pcm");
            SyntheticPcm pcm;
            if (!p.is_object()) throw ValidationError(where + "synthetic_pcm: expected an object");
            if (p.contains("frequency_hz")) {
                if (!p.at("frequency_hz").is_number() || p.at("frequency_hz").get<double>() <= 0.0 ||
                    p.at("frequency_hz").get<double>() >= kSampleRate / 2.0) {
                    throw ValidationError(where + "synthetic_pcm.frequency_hz: out of range");
                }
                pcm.frequency_hz = p.at("frequency_hz").get<double>();
            }
            pcm.frames = frames_field(p, "frames", where + "synthetic_pcm.");
            turn.synthetic_pcm = pcm;
        }
        s.customer_turns.push_back(std::move(turn));
    }

    if (!j.contains("agent_turns") || !j.at("agent_turns").is_array() || j.at("agent_turns").empty()) {
        throw ValidationError("agent_turns: expected a non-empty array");
    }
    for (std::size_t i = 0; i < j.at("agent_turns").size(); ++i) {
        const Json& a = j.at("agent_turns")[i];
        const std::string where = "agent_turns[" + std::to_string(i) + "]";
        AgentLine line;
        if (a.is_string()) {
            line.text = a.get<std::string>();
        } else if (a.is_object()) {
            line.text = str_field(a, "text", where + ".");
            line.audio_frames = frames_field(a, "audio_frames", where + ".");
        } else {
            throw ValidationError(where + ": expected a string or an object");
        }
        if (text::trim(line.text).empty()) throw ValidationError(where + ": empty");
        if (!single_spaced(line.text)) {
            throw ValidationError(where + ": sentences must be separated by single spaces");
        }
        s.agent_turns.push_back(std::move(line));
    }

    if (j.contains("expected_agent_behaviors")) {
        if (!j.at("expected_agent_behaviors").is_array()) {
            throw ValidationError("expected_agent_behaviors: expected an array");
        }
        for (const auto& b : j.at("expected_agent_behaviors")) {
            if (!b.is_string()) throw ValidationError("expected_agent_behaviors: expected strings");
            s.expected_agent_behaviors.push_back(b.get<std::string>());
        }
    }
    return s;
}

Json to_json(const ScenarioScript& s) {
    Json customers = Json::array();
    for (const auto& t : s.customer_turns) {
        Json c = {{"trigger", t.trigger == Trigger::on_session_start ? "on_session_start" : "on_turn_complete"},
                  {"text", t.text}};
        if (t.synthetic_pcm) {
            c["synthetic_pcm"] = {{"frequency_hz", t.synthetic_pcm->frequency_hz}};
            if (t.synthetic_pcm->frames > 0) c["synthetic_pcm"]["frames"] = t.synthetic_pcm->frames;
        }
        customers.push_back(std::move(c));
    }
    Json agents = Json::array();
    for (const auto& a : s.agent_turns) {
        if (a.audio_frames == 0) {
            agents.push_back(a.text);
        } else {
            agents.push_back({{"text", a.text}, {"audio_frames", a.audio_frames}});
        }
    }
    Json j = {{"scenario_id", s.scenario_id},
              {"customer_turns", customers},
              {"agent_turns", agents},
              {"expected_agent_behaviors", s.expected_agent_behaviors}};
    if (!s.description.empty()) j["description"] = s.description;
    return j;
}

ScenarioScript load_scenario(const std::filesystem::path& path) {
    try {
        return scenario_from_json(parse_json_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::vector<ScriptedLine> script_interleaving(const ScenarioScript& s) {
    std::vector<ScriptedLine> out;
    std::size_t a = 0;
    std::size_t c = 0;
    bool agent_turn = s.agent_opens();
    for (;;) {
        if (agent_turn) {
            if (a == s.agent_turns.size()) break;
            out.push_back({true, s.agent_turns[a++].text});
        } else {
            if (c == s.customer_turns.size()) break;
            out.push_back({false, s.customer_turns[c++].text});
        }
        agent_turn = !agent_turn;
    }
    return out;
}

Pcm customer_pcm(const CustomerTurn& turn) {
    const SyntheticPcm p = turn.synthetic_pcm.value_or(SyntheticPcm{});
    const std::size_t frames = p.frames > 0 ? p.frames : std::max<std::size_t>(1, text::words(turn.text).size());
    return tone_pcm(p.frequency_hz, frames);
}

std::vector<AdapterEvent> scripted_next(const ScenarioScript& s, std::size_t step) {
    if (step >= s.agent_turns.size()) {
        return {AdapterEvent::turn_done(), AdapterEvent::end("script exhausted")};
    }
    const AgentLine& line = s.agent_turns[step];
    const auto parts = text::sentences(line.text);

    std::vector<std::size_t> words;
    std::size_t total_words = 0;
    for (const auto& p : parts) {
        words.push_back(std::max<std::size_t>(1, text::words(p).size()));
        total_words += words.back();
    }
    const std::size_t total_frames = line.audio_frames > 0 ? line.audio_frames : total_words;
    const double frequency = 300.0 + 100.0 * static_cast<double>(step % 8);
    const Pcm audio = tone_pcm(frequency, total_frames);

    std::vector<AdapterEvent> events;
    std::size_t cum_words = 0;
    std::size_t frame = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        events.push_back(AdapterEvent::transcript(i + 1 < parts.size() ? parts[i] + " " : parts[i]));
        cum_words += words[i];
        const std::size_t until = total_frames * cum_words / total_words;
        for (; frame < until; ++frame) {
            events.push_back(AdapterEvent::audio_delta(audio.substr(frame * kFrameBytes, kFrameBytes)));
        }
    }
    events.push_back(AdapterEvent::turn_done());
    return events;
}

std::vector<AdapterEvent> ScriptedAdapter::open(const SessionContext&) {
    step_ = 0;
    if (script_.agent_opens()) return advance();
    return {};
}

std::vector<AdapterEvent> ScriptedAdapter::on_audio(const Pcm&) { return {}; }

std::vector<AdapterEvent> ScriptedAdapter::on_audio_end() {
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    return advance();
}

std::vector<AdapterEvent> ScriptedAdapter::advance() {
    auto events = scripted_next(script_, step_);
    if (step_ < script_.agent_turns.size()) ++step_;
    return events;
}

// ---- external -------------------------------------------------------------------

ExternalSpeechConfig ExternalSpeechConfig::from_env() {
    ExternalSpeechConfig c;
    if (const char* url = std::getenv("VC_UPSTREAM_URL")) c.url = url;
    if (const char* key = std::getenv("VC_UPSTREAM_KEY")) c.api_key = key;
    return c;
}

std::string_view to_string(ExternalSpeechAdapter::State s) {
    switch (s) {
        case ExternalSpeechAdapter::State::disconnected: return "disconnected";
        case ExternalSpeechAdapter::State::connecting: return "connecting";
        case ExternalSpeechAdapter::State::connected: return "connected";
        case ExternalSpeechAdapter::State::failed: return "failed";
    }
    return "?";
}

std::vector<AdapterEvent> ExternalSpeechAdapter::open(const SessionContext&) {
    if (!config_.configured()) {
        state_ = State::failed;
        throw AdapterError("external speech connector is not configured", false,
                           "set VC_UPSTREAM_URL and VC_UPSTREAM_KEY");
    }
    state_ = State::connecting;
    state_ = State::failed;
    throw AdapterError("external speech connector cannot reach " + config_.url, true,
                       "this build has no upstream speech transport");
}

std::vector<AdapterEvent> ExternalSpeechAdapter::on_audio(const Pcm&) {
    if (state_ != State::connected) return {AdapterEvent::failure("upstream not connected")};
    return {};
}

std::vector<AdapterEvent> ExternalSpeechAdapter::on_audio_end() { return on_audio({}); }

}  // namespace voiceclone
