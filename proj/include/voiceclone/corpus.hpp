#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voiceclone/io.hpp"

namespace voiceclone {

enum class Speaker { agent, customer };

enum class Outcome { sale, appointment, follow_up, rejection, removed_from_list };

std::string_view to_string(Speaker s);
std::string_view to_string(Outcome o);
std::optional<Speaker> parse_speaker(std::string_view s);
std::optional<Outcome> parse_outcome(std::string_view s);

// Sale or booked appointment.
inline bool is_conversion(Outcome o) { return o == Outcome::sale || o == Outcome::appointment; }

struct Turn {
    Speaker speaker = Speaker::agent;
    std::string text;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    Json extra = Json::object();  // unknown keys, re-emitted verbatim

    friend bool operator==(const Turn&, const Turn&) = default;
};

struct CallRecord {
    std::string call_id;
    std::string agent_id;
    std::string timestamp;  // ISO-8601 UTC, 'Z' suffix
    std::int64_t duration_ms = 0;
    Outcome outcome = Outcome::rejection;
    std::vector<std::string> topic_tags;
    std::vector<Turn> turns;
    Json extra = Json::object();

    bool has_tag(std::string_view tag) const;

    friend bool operator==(const CallRecord&, const CallRecord&) = default;
};

struct Violation {
    std::string field;
    std::string rule;

    friend bool operator==(const Violation&, const Violation&) = default;
};

struct LineDiagnostic {
    int line = 0;  // 1-based
    std::string message;
};

// Immutable once loaded; safe to share between readers.
struct Corpus {
    std::vector<CallRecord> records;
    std::vector<LineDiagnostic> diagnostics;

    const CallRecord* find(std::string_view call_id) const;
    bool empty() const { return records.empty(); }
    std::size_t size() const { return records.size(); }
};

struct CorpusStats {
    std::size_t total_calls = 0;
    std::map<std::string, std::size_t> calls_per_agent;
    std::map<std::string, std::size_t> outcome_distribution;  // non-zero outcomes only
    double mean_duration_ms = 0.0;

    friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

// Schema conversion. from_json throws ValidationError naming the field when a
// key is missing or has the wrong type; it does not check invariants.
Json to_json(const Turn& turn);
Json to_json(const CallRecord& record);
Json to_json(const CorpusStats& stats);
CallRecord call_record_from_json(const Json& j);
Turn turn_from_json(const Json& j, const std::string& where);

std::vector<Violation> validate_record(const CallRecord& record);

// Parses JSONL text. Each rejected line yields one diagnostic; nothing is
// dropped silently.
Corpus parse_corpus(std::string_view jsonl);

// Throws Error when the file cannot be read.
Corpus load_corpus(const std::filesystem::path& path);

// One compact JSON object per line, LF terminated.
std::string serialize_corpus(const Corpus& corpus);

// Throws ValidationError("empty corpus") on an empty corpus.
CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace voiceclone
