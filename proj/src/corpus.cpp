#include "voiceclone/corpus.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "voiceclone/error.hpp"

namespace voiceclone {

namespace {

constexpr std::string_view kOutcomeNames[] = {"sale", "appointment", "follow_up", "rejection",
                                              "removed_from_list"};

const std::set<std::string, std::less<>> kRecordKeys = {
    "call_id", "agent_id", "timestamp", "duration_ms", "outcome", "topic_tags", "turns"};
const std::set<std::string, std::less<>> kTurnKeys = {"speaker", "text", "start_ms", "end_ms"};

const Json& require(const Json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw ValidationError(where + key + ": missing");
    }
    return *it;
}

std::string require_string(const Json& j, const char* key, const std::string& where) {
    const Json& v = require(j, key, where);
    if (!v.is_string()) {
        throw ValidationError(where + key + ": expected string");
    }
    return v.get<std::string>();
}

std::int64_t require_int(const Json& j, const char* key, const std::string& where) {
    const Json& v = require(j, key, where);
    if (!v.is_number_integer()) {
        throw ValidationError(where + key + ": expected integer");
    }
    return v.get<std::int64_t>();
}

Json collect_extra(const Json& j, const std::set<std::string, std::less<>>& known) {
    Json extra = Json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.contains(it.key())) {
            extra[it.key()] = it.value();
        }
    }
    return extra;
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); });
}

}  // namespace

std::string_view to_string(Speaker s) { return s == Speaker::agent ? "agent" : "customer"; }

std::string_view to_string(Outcome o) { return kOutcomeNames[static_cast<int>(o)]; }

std::optional<Speaker> parse_speaker(std::string_view s) {
    if (s == "agent") return Speaker::agent;
    if (s == "customer") return Speaker::customer;
    return std::nullopt;
}

std::optional<Outcome> parse_outcome(std::string_view s) {
    for (int i = 0; i < 5; ++i) {
        if (kOutcomeNames[i] == s) {
            return static_cast<Outcome>(i);
        }
    }
    return std::nullopt;
}

bool CallRecord::has_tag(std::string_view tag) const {
    return std::find(topic_tags.begin(), topic_tags.end(), tag) != topic_tags.end();
}

const CallRecord* Corpus::find(std::string_view call_id) const {
    for (const auto& r : records) {
        if (r.call_id == call_id) {
            return &r;
        }
    }
    return nullptr;
}

Json to_json(const Turn& turn) {
    Json j = turn.extra;
    j["speaker"] = to_string(turn.speaker);
    j["text"] = turn.text;
    j["start_ms"] = turn.start_ms;
    j["end_ms"] = turn.end_ms;
    return j;
}

Json to_json(const CallRecord& r) {
    Json j = r.extra;
    j["call_id"] = r.call_id;
    j["agent_id"] = r.agent_id;
    j["timestamp"] = r.timestamp;
    j["duration_ms"] = r.duration_ms;
    j["outcome"] = to_string(r.outcome);
    j["topic_tags"] = r.topic_tags;
    Json turns = Json::array();
    for (const auto& t : r.turns) {
        turns.push_back(to_json(t));
    }
    j["turns"] = std::move(turns);
    return j;
}

Json to_json(const CorpusStats& s) {
    return Json{{"total_calls", s.total_calls},
                {"calls_per_agent", s.calls_per_agent},
                {"outcome_distribution", s.outcome_distribution},
                {"mean_duration_ms", s.mean_duration_ms}};
}

Turn turn_from_json(const Json& j, const std::string& where) {
    if (!j.is_object()) {
        throw ValidationError(where + ": expected object");
    }
    Turn t;
    const std::string speaker = require_string(j, "speaker", where + ".");
    auto sp = parse_speaker(speaker);
    if (!sp) {
        throw ValidationError(where + ".speaker: unknown speaker '" + speaker + "'");
    }
    t.speaker = *sp;
    t.text = require_string(j, "text", where + ".");
    t.start_ms = require_int(j, "start_ms", where + ".");
    t.end_ms = require_int(j, "end_ms", where + ".");
    t.extra = collect_extra(j, kTurnKeys);
    return t;
}

CallRecord call_record_from_json(const Json& j) {
    if (!j.is_object()) {
        throw ValidationError("record: expected JSON object");
    }
    CallRecord r;
    r.call_id = require_string(j, "call_id", "");
    r.agent_id = require_string(j, "agent_id", "");
    r.timestamp = require_string(j, "timestamp", "");
    r.duration_ms = require_int(j, "duration_ms", "");
    const std::string outcome = require_string(j, "outcome", "");
    auto oc = parse_outcome(outcome);
    if (!oc) {
        throw ValidationError("outcome: unknown outcome '" + outcome + "'");
    }
    r.outcome = *oc;
    const Json& tags = require(j, "topic_tags", "");
    if (!tags.is_array()) {
        throw ValidationError("topic_tags: expected array");
    }
    for (const auto& tag : tags) {
        if (!tag.is_string()) {
            throw ValidationError("topic_tags: expected strings");
        }
        r.topic_tags.push_back(tag.get<std::string>());
    }
    const Json& turns = require(j, "turns", "");
    if (!turns.is_array()) {
        throw ValidationError("turns: expected array");
    }
    for (std::size_t i = 0; i < turns.size(); ++i) {
        r.turns.push_back(turn_from_json(turns[i], "turns[" + std::to_string(i) + "]"));
    }
    r.extra = collect_extra(j, kRecordKeys);
    return r;
}

std::vector<Violation> validate_record(const CallRecord& r) {
    static const std::regex iso_utc(R"(^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?Z$)");
    std::vector<Violation> out;
    if (is_blank(r.call_id)) out.push_back({"call_id", "empty"});
    if (is_blank(r.agent_id)) out.push_back({"agent_id", "empty"});
    if (!std::regex_match(r.timestamp, iso_utc)) {
        out.push_back({"timestamp", "not ISO-8601 UTC"});
    }
    if (r.duration_ms <= 0) out.push_back({"duration_ms", "not positive"});

    bool has_agent = false;
    bool has_customer = false;
    std::int64_t max_end = 0;
    for (std::size_t i = 0; i < r.turns.size(); ++i) {
        const Turn& t = r.turns[i];
        const std::string at = "turns[" + std::to_string(i) + "]";
        if (t.start_ms < 0) out.push_back({at + ".start_ms", "negative"});
        if (t.end_ms < t.start_ms) out.push_back({at + ".end_ms", "end precedes start"});
        if (is_blank(t.text)) out.push_back({at + ".text", "empty text"});
        if (i > 0 && t.start_ms < r.turns[i - 1].start_ms) {
            out.push_back({at + ".start_ms", "out of order"});
        }
        max_end = std::max(max_end, t.end_ms);
        has_agent |= t.speaker == Speaker::agent;
        has_customer |= t.speaker == Speaker::customer;
    }
    if (r.duration_ms > 0 && r.duration_ms < max_end) {
        out.push_back({"duration_ms", "shorter than last turn"});
    }
    if (!has_agent) out.push_back({"turns", "no agent turn"});
    if (!has_customer) out.push_back({"turns", "no customer turn"});
    return out;
}

Corpus parse_corpus(std::string_view jsonl) {
    Corpus corpus;
    std::set<std::string, std::less<>> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < jsonl.size()) {
        std::size_t nl = jsonl.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = jsonl.size();
        }
        std::string_view line = jsonl.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (is_blank(line)) {
            corpus.diagnostics.push_back({line_no, "blank line"});
            continue;
        }
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            corpus.diagnostics.push_back({line_no, std::string("invalid JSON: ") + e.what()});
            continue;
        }
        CallRecord record;
        try {
            record = call_record_from_json(j);
        } catch (const ValidationError& e) {
            corpus.diagnostics.push_back({line_no, e.what()});
            continue;
        }
        auto violations = validate_record(record);
        if (!violations.empty()) {
            std::string msg = "record " + record.call_id + ":";
            for (const auto& v : violations) {
                msg += " " + v.field + " (" + v.rule + ");";
            }
            msg.pop_back();
            corpus.diagnostics.push_back({line_no, msg});
            continue;
        }
        if (!seen.insert(record.call_id).second) {
            corpus.diagnostics.push_back({line_no, "duplicate call_id " + record.call_id});
            continue;
        }
        corpus.records.push_back(std::move(record));
    }
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
    return parse_corpus(read_text_file(path));
}

std::string serialize_corpus(const Corpus& corpus) {
    std::string out;
    for (const auto& r : corpus.records) {
        out += to_json(r).dump();
        out.push_back('\n');
    }
    return out;
}

CorpusStats corpus_stats(const Corpus& corpus) {
    if (corpus.empty()) {
        throw ValidationError("empty corpus");
    }
    CorpusStats s;
    s.total_calls = corpus.size();
    double total = 0.0;
    for (const auto& r : corpus.records) {
        ++s.calls_per_agent[r.agent_id];
        ++s.outcome_distribution[std::string(to_string(r.outcome))];
        total += static_cast<double>(r.duration_ms);
    }
    s.mean_duration_ms = total / static_cast<double>(s.total_calls);
    return s;
}

}  // namespace voiceclone
