#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voiceclone/adapters.hpp"
#include "voiceclone/corpus.hpp"
#include "voiceclone/io.hpp"

namespace voiceclone {

// ---- rubric ---------------------------------------------------------------------

inline constexpr std::array<std::string_view, 5> kRubricCategories = {
    "Introduction & framing", "Product communication", "Salesmanship & drive", "Objection handling",
    "Closing & next steps"};
inline constexpr std::size_t kRubricCriteria = 22;

struct Criterion {
    int id = 0;
    std::string text;
};

struct RubricCategory {
    std::string name;
    std::string description;
    std::vector<Criterion> criteria;
};

struct Rubric {
    std::vector<RubricCategory> categories;
    int scale_min = 1;
    int scale_max = 5;
    bool canonical = false;
    std::string note;

    std::size_t criterion_count() const;
    std::vector<int> criterion_ids() const;  // sorted
    // Index into categories, or -1.
    int category_index(int criterion_id) const;
    // Category names, criterion ids and scale; equal signatures mean
    // comparable reports.
    std::string signature() const;
};

// Throws ValidationError unless the rubric has the five standard categories
// in order, 22 distinct criteria and a 1-5 scale.
Rubric rubric_from_json(const Json& j);
Json to_json(const Rubric& r);
Rubric load_rubric(const std::filesystem::path& path);

// ---- trials -----------------------------------------------------------------------

enum class AgentKind { human, ai };
std::string_view to_string(AgentKind k);
std::optional<AgentKind> parse_agent_kind(std::string_view s);

struct TrialRecording {
    std::string trial_id;
    std::string scenario_id;
    AgentKind agent_kind = AgentKind::ai;
    std::vector<Turn> transcript;
    std::optional<std::string> audio_path;
    std::optional<std::string> playbook_version;
    std::optional<std::string> agent_id;
    std::optional<std::string> agent_name;
    bool valid = true;
    std::string error;           // cause when !valid
    Json metrics = nullptr;      // session.metrics as received
};

Json to_json(const TrialRecording& r);
TrialRecording recording_from_json(const Json& j);
TrialRecording load_recording(const std::filesystem::path& path);

struct TrialOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    std::string playbook_id;
    std::string adapter = "scripted";
    std::string scenario;  // gateway scenario name
    std::string trial_id;
    std::optional<std::string> playbook_version;
    std::optional<std::string> agent_id;
    std::optional<std::string> agent_name;
    std::chrono::milliseconds timeout{30000};  // per message
};

// Plays the customer side of `script` against a gateway session and records
// the conversation. Turn times follow the audio timeline, not the wall
// clock. A failed session yields a recording with valid = false.
TrialRecording run_scripted_trial(const TrialOptions& options, const ScenarioScript& script);

// ---- blinding --------------------------------------------------------------------

struct BlindItem {
    std::string label;  // R01, R02, ...
    std::string scenario_id;
    std::vector<Turn> transcript;
};

struct BlindKeyEntry {
    std::string trial_id;
    std::string scenario_id;
    AgentKind agent_kind = AgentKind::ai;
    std::optional<std::string> playbook_version;
    std::optional<std::string> agent_id;
};

struct BlindPacket {
    std::uint64_t seed = 0;
    std::vector<BlindItem> items;
    std::map<std::string, BlindKeyEntry> key;  // label -> recording, kept out of the packet
};

inline constexpr std::string_view kRedacted = "[redacted]";

std::string blind_label(std::size_t index);  // 0 -> R01

// Order of the recordings in the packet: trial ids sorted, then shuffled
// with Rng(seed).
std::vector<std::size_t> blind_permutation(std::size_t n, std::uint64_t seed);

// Throws ValidationError for fewer than two recordings, duplicate trial ids
// or invalid recordings.
BlindPacket build_blind_packet(const std::vector<TrialRecording>& recordings, std::uint64_t seed);

// Identity tokens of a recording that must not reach evaluators.
std::vector<std::string> identity_tokens(const TrialRecording& r);
std::string redact(std::string_view text, const std::vector<std::string>& tokens);

Json packet_to_json(const BlindPacket& p);  // items only
Json key_to_json(const BlindPacket& p);
std::map<std::string, BlindKeyEntry> key_from_json(const Json& j);

// ---- scoring ---------------------------------------------------------------------

struct ScoreSheet {
    std::string evaluator_id;
    std::string label;
    std::vector<std::pair<int, int>> scores;  // (criterion_id, score) as read
};

struct SheetRejection {
    std::string evaluator_id;
    std::string label;
    std::string reason;
};

struct IngestResult {
    std::vector<ScoreSheet> accepted;
    std::vector<SheetRejection> rejected;
};

// CSV with header evaluator_id,label,criterion_id,score. Rows are grouped
// into one sheet per (evaluator_id, label) in first-seen order. Throws
// ValidationError with the line number on malformed rows.
std::vector<ScoreSheet> parse_score_csv(std::string_view csv);

// Accepts exactly the complete sheets: every rubric criterion once, each
// score within the scale, label known.
IngestResult ingest_score_sheets(const std::vector<std::string>& labels, const std::vector<ScoreSheet>& sheets,
                                 const Rubric& rubric);

// ---- aggregation -----------------------------------------------------------------

double mean_of(const std::vector<double>& xs);
// Sample standard deviation (n - 1); zero for fewer than two values.
double sample_std(const std::vector<double>& xs);

struct CategoryStat {
    std::string category;
    double mean = 0.0;
    double std = 0.0;
};

struct CellReport {
    std::string scenario_id;  // "all" for the across-scenario rows
    AgentKind agent_kind = AgentKind::ai;
    std::size_t sheets = 0;
    std::vector<CategoryStat> categories;  // rubric order
    double overall_mean = 0.0;
    double overall_std = 0.0;
    std::map<int, double> criterion_means;
};

struct DeltaRow {
    std::string scenario_id;
    std::string category;  // or "overall"
    double ai_minus_human = 0.0;
};

struct AggregateReport {
    std::string rubric_signature;
    std::vector<std::string> evaluators;  // pseudonyms E1..
    std::vector<CellReport> cells;        // per scenario then agent kind, then the "all" rows
    std::vector<DeltaRow> deltas;

    const CellReport* cell(std::string_view scenario, AgentKind kind) const;
};

struct AggregateOutput {
    AggregateReport report;
    std::map<std::string, std::string> evaluator_key;  // pseudonym -> raw id
};

// Unblinds accepted sheets through the key. Across-scenario rows average the
// per-scenario means with equal weight. Throws ValidationError when a sheet
// label is missing from the key or a cell has no sheets.
AggregateOutput aggregate_scores(const std::vector<ScoreSheet>& sheets,
                                 const std::map<std::string, BlindKeyEntry>& key, const Rubric& rubric);

Json to_json(const AggregateReport& r);
AggregateReport report_from_json(const Json& j);
std::string report_csv(const AggregateReport& r);

struct ChangeRow {
    std::string scenario_id;  // or "all"
    AgentKind agent_kind = AgentKind::ai;
    std::string category;     // or "overall"
    double v1 = 0.0;
    double v2 = 0.0;
    double delta = 0.0;
    double pct_change = 0.0;
    bool flagged = false;
};

struct ComparisonDelta {
    std::string version;  // "v1" or "v2"
    DeltaRow row;
    bool flagged = false;
};

struct Comparison {
    std::vector<ChangeRow> changes;
    std::vector<ComparisonDelta> deltas;
    double threshold = 0.5;

    const ChangeRow* change(std::string_view scenario, AgentKind kind, std::string_view category) const;
};

// Throws ValidationError when the rubric signatures or scenario sets differ.
Comparison compare_reports(const AggregateReport& v1, const AggregateReport& v2, double threshold = 0.5);
Json to_json(const Comparison& c);

}  // namespace voiceclone
