#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voiceclone/knowledge.hpp"

namespace voiceclone {

// The Agent Playbook: the nine-section system prompt that defines the cloned
// agent. Sections, in prompt order:
//   role_definition, persona_style, conversation_flow, objection_tactics,
//   product_knowledge, terminology_rules, example_dialogues,
//   compliance_rules, context_slots

enum class FlowStage { opening, discovery, pitch, objection_handling, closing_followup };

inline constexpr int kFlowStageCount = 5;

std::string_view to_string(FlowStage s);
std::optional<FlowStage> parse_flow_stage(std::string_view s);

struct RoleDefinition {
    std::string agent_name;  // usually the agent name slot placeholder
    std::string company;
    std::string product;
    std::string primary_goal;
    std::vector<std::string> responsibilities;  // from the drafted job description

    friend bool operator==(const RoleDefinition&, const RoleDefinition&) = default;
};

struct FlowStep {
    FlowStage stage = FlowStage::opening;
    std::string guidance;

    friend bool operator==(const FlowStep&, const FlowStep&) = default;
};

struct TerminologyRule {
    std::string jargon;
    std::string replacement;

    friend bool operator==(const TerminologyRule&, const TerminologyRule&) = default;
};

// Placeholders use the {{slot_name}} syntax.
struct ContextSlots {
    std::string agent_name_slot = "{{agent_name}}";
    std::string agent_id_slot = "{{agent_id}}";
    std::optional<std::string> customer_plan_slot;
    std::optional<std::string> customer_tenure_slot;

    friend bool operator==(const ContextSlots&, const ContextSlots&) = default;
};

struct AgentPlaybook {
    RoleDefinition role_definition;
    std::vector<std::string> persona_style;
    std::vector<FlowStep> conversation_flow;
    std::vector<ObjectionTactic> objection_tactics;
    std::vector<Fact> product_knowledge;
    std::vector<TerminologyRule> terminology_rules;
    std::vector<ExampleDialogue> example_dialogues;
    std::vector<std::string> compliance_rules;
    ContextSlots context_slots;

    const FlowStep* stage(FlowStage s) const;
    FlowStep* stage(FlowStage s);

    friend bool operator==(const AgentPlaybook&, const AgentPlaybook&) = default;
};

inline constexpr std::array<std::string_view, 9> kSectionKeys = {
    "role_definition",   "persona_style",     "conversation_flow",
    "objection_tactics", "product_knowledge", "terminology_rules",
    "example_dialogues", "compliance_rules",  "context_slots"};

// Section headings of the rendered prompt, same order as kSectionKeys.
inline constexpr std::array<std::string_view, 9> kSectionTitles = {
    "Agent role definition",
    "Persona and communication style",
    "Conversation flow guidelines",
    "Objection handling tactics",
    "Product and service knowledge",
    "Terminology and tone adjustments",
    "Example dialogue snippets",
    "Compliance rules",
    "Agent and customer context"};

// The five fixed flow stages with default guidance, in order.
std::vector<FlowStep> default_conversation_flow();

bool is_slot_placeholder(std::string_view s);
bool is_removal_rule(std::string_view rule);

// Structural invariants (stage order, slot syntax, removal rule). Empty when valid.
std::vector<std::string> check_playbook(const AgentPlaybook& pb);

// ---- serialization -------------------------------------------------------

Json to_json(const AgentPlaybook& pb);

// Throws ValidationError on unknown or missing sections, wrong stage order,
// malformed slots, or a missing removal rule.
AgentPlaybook playbook_from_json(const Json& j);

std::string playbook_to_canonical_json(const AgentPlaybook& pb);
AgentPlaybook load_playbook(const std::filesystem::path& path);

// Canonical JSON out and back in.
AgentPlaybook roundtrip(const AgentPlaybook& pb);

// ---- rendering -----------------------------------------------------------

using SlotValues = std::map<std::string, std::string, std::less<>>;

// Prose system prompt with all nine sections in order and every {{slot}}
// substituted. Throws ValidationError naming the slot when a value is missing.
std::string render_system_prompt(const AgentPlaybook& pb, const SlotValues& slot_values);

// Lines (or fragments) of `text` that look like list markers: a leading
// "1." / "1)" / bullet / dash, or the phrase "point number".
bool has_list_marker(std::string_view text);

// ---- lint ----------------------------------------------------------------

enum class LintCode { AMBIGUOUS_OBJECTIVE, REDUNDANT_INSTRUCTIONS, FORMATTING_ARTEFACTS, OVERCAUTIOUS_POLITENESS };
enum class Severity { error, warning };

std::string_view to_string(LintCode c);
std::string_view to_string(Severity s);

struct LintDiagnostic {
    LintCode code;
    Severity severity;
    std::string location;
    std::string message;

    friend bool operator==(const LintDiagnostic&, const LintDiagnostic&) = default;
};

struct LintConfig {
    std::vector<std::string> goal_verbs = {"book", "schedule", "secure", "sell", "close",
                                           "confirm", "arrange", "set up", "sign up"};
    double redundancy_threshold = 0.8;
    double politeness_ratio = 3.0;
};

// Word 3-gram overlap |A and B| / min(|A|, |B|) after lower-casing and
// stripping punctuation. Zero when either side has fewer than three words.
double trigram_overlap(std::string_view a, std::string_view b);

bool is_politeness_directive(std::string_view text);
bool is_steering_example(std::string_view text);
bool has_goal_verb(std::string_view goal, const std::vector<std::string>& verbs);

// Diagnostics come out grouped by rule, each group in section order.
std::vector<LintDiagnostic> lint_playbook(const AgentPlaybook& pb, const LintConfig& config = {});

bool has_errors(const std::vector<LintDiagnostic>& diags);

// ---- fine-tune export ------------------------------------------------------

struct QaPair {
    std::string question;
    std::string answer;
    std::string source;  // "fact:<topic>:<index>" or "objection:<index>"

    friend bool operator==(const QaPair&, const QaPair&) = default;
};

// Up to target_n product pairs (facts in manual order) plus one pair per
// objection tactic. Throws ValidationError when target_n is zero or the
// manual is empty.
std::vector<QaPair> export_finetune_dataset(const KnowledgeManual& manual, std::size_t target_n = 50);

// {"question":...,"answer":...} per line.
std::string finetune_jsonl(const std::vector<QaPair>& pairs);

}  // namespace voiceclone
