#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voiceclone/corpus.hpp"

namespace voiceclone {

// Artifacts produced by the extraction steps of the cloning pipeline and
// consumed by playbook composition.

struct JobDescription {
    std::vector<std::string> tasks;
    std::vector<std::string> responsibilities;
    std::vector<std::string> style_notes;
    std::vector<std::string> source_call_ids;
    std::optional<std::string> primary_goal;

    friend bool operator==(const JobDescription&, const JobDescription&) = default;
};

struct Fact {
    std::string statement;
    std::vector<std::string> source_call_ids;
    std::string topic;

    friend bool operator==(const Fact&, const Fact&) = default;
};

struct ObjectionTactic {
    std::string objection;
    std::string tactic;
    std::vector<std::string> source_call_ids;

    friend bool operator==(const ObjectionTactic&, const ObjectionTactic&) = default;
};

struct KnowledgeManual {
    std::map<std::string, std::vector<Fact>> topics;  // keyed and ordered by topic
    std::vector<ObjectionTactic> objections;
    std::vector<std::string> closing_strategies;

    std::size_t fact_count() const;
    bool empty() const { return fact_count() == 0 && objections.empty(); }

    friend bool operator==(const KnowledgeManual&, const KnowledgeManual&) = default;
};

enum class DialogueStage { opening, value_proposition, objection_handling, closing };

inline constexpr int kDialogueStageCount = 4;
inline constexpr std::size_t kMaxDialogueTurns = 8;

std::string_view to_string(DialogueStage s);
std::optional<DialogueStage> parse_dialogue_stage(std::string_view s);

struct ExampleDialogue {
    DialogueStage stage = DialogueStage::opening;
    std::vector<Turn> turns;
    std::vector<std::string> source_call_ids;

    friend bool operator==(const ExampleDialogue&, const ExampleDialogue&) = default;
};

// Empty when the invariants hold (turn bound, agent-first for opening/closing).
std::vector<std::string> check_dialogue(const ExampleDialogue& d);

Json to_json(const JobDescription& jd);
Json to_json(const Fact& f);
Json to_json(const ObjectionTactic& o);
Json to_json(const KnowledgeManual& m);
Json to_json(const ExampleDialogue& d);

JobDescription job_description_from_json(const Json& j);
Fact fact_from_json(const Json& j);
ObjectionTactic objection_from_json(const Json& j);
KnowledgeManual manual_from_json(const Json& j);
ExampleDialogue dialogue_from_json(const Json& j);

}  // namespace voiceclone
