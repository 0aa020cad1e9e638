#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "voiceclone/corpus.hpp"
#include "voiceclone/knowledge.hpp"
#include "voiceclone/playbook.hpp"
#include "voiceclone/text_model.hpp"

namespace voiceclone {

// ---- sampling and ranking ------------------------------------------------

enum class Tier { top, average };
std::string_view to_string(Tier t);

struct TierWeights {
    double conversion = 0.8;
    double duration = 0.2;
};

struct AgentTier {
    std::string agent_id;
    double conversion_rate = 0.0;       // (sale + appointment) / calls
    double duration_consistency = 0.0;  // 1 - normalised mean |duration - median|
    double quality_score = 0.0;
    Tier tier = Tier::average;
};

// min(n, corpus size) records drawn uniformly without replacement, in draw
// order. Deterministic per seed.
std::vector<CallRecord> sample_calls(const Corpus& corpus, std::size_t n, std::uint64_t seed);

// One row per agent, sorted by agent_id. The duration median is taken over
// `calls`, so scores are comparable within one run only.
std::vector<AgentTier> tier_agents(std::span<const CallRecord> calls, double threshold,
                                   TierWeights weights = {});

// Total order used for exemplar selection: converted calls first, then longer
// duration, then call_id.
bool exemplar_before(const CallRecord& a, const CallRecord& b);

// Up to k calls of top-tier agents in exemplar order.
// Throws ValidationError("no top tier") when no agent is top tier.
std::vector<CallRecord> select_exemplars(std::span<const CallRecord> calls,
                                         std::span<const AgentTier> tiers, std::size_t k);

// ---- extraction ----------------------------------------------------------

// Adapter failures surface as AdapterError; malformed adapter output is a
// non-retriable AdapterError.
JobDescription draft_job_description(std::span<const CallRecord> calls, TextModelAdapter& model);

using CallsByTopic = std::map<std::string, std::vector<CallRecord>>;

// Topics are extracted independently (concurrently when the adapter allows)
// and merged in topic order, so the result does not depend on completion order.
KnowledgeManual extract_knowledge(const CallsByTopic& calls_by_topic, TextModelAdapter& model);

std::vector<ExampleDialogue> generate_example_dialogues(std::span<const CallRecord> calls,
                                                        TextModelAdapter& model);

// ---- composition ---------------------------------------------------------

struct ComplianceRules {
    std::vector<std::string> rules;
    std::string removal_rule;    // must mention removal from the call list
    std::string closing_phrase;  // required company closing phrase
};

ComplianceRules default_compliance_rules();

struct PlaybookSettings {
    std::string agent_name = "{{agent_name}}";
    std::string company = "Company X";
    std::string product = "premium internet package";
    std::string primary_goal = "book an installation appointment for the premium internet package";
    std::vector<std::string> persona = {
        "Speak Thai with a warm, friendly yet professional tone",
        "Use clear, simple vocabulary and show empathy without being pushy",
        "Use the customer's name to build rapport",
        "Stay polite and respectful, but keep the call moving toward the goal",
    };
    std::map<FlowStage, std::string> flow_guidance;  // overrides of the defaults
    std::vector<TerminologyRule> terminology = {
        {"FUP", "speed throttling after the high-speed quota is used"}};
    LintConfig lint;
};

ContextSlots default_context_slots();

// Throws ValidationError when compliance rules are missing or the composed
// playbook would fail lint with an error.
AgentPlaybook compose_playbook(const JobDescription& jd, const KnowledgeManual& manual,
                               const std::vector<ExampleDialogue>& dialogues,
                               const ComplianceRules& compliance, const ContextSlots& context,
                               const PlaybookSettings& settings = {});

// ---- pipeline --------------------------------------------------------------

struct CloneConfig {
    std::size_t sample_n = 1000;
    std::size_t exemplar_k = 40;
    std::size_t topic_call_cap = 40;
    double tier_threshold = 0.6;
    TierWeights weights;
    std::vector<std::string> topics = {"price", "speed", "installation", "contract"};
    std::string adapter = "mock";
    std::uint64_t seed = 7;
    PlaybookSettings playbook;
    ComplianceRules compliance = default_compliance_rules();
    ContextSlots context = default_context_slots();
};

struct CloneResult {
    std::vector<std::string> sampled_call_ids;
    std::vector<AgentTier> tiers;
    std::vector<std::string> exemplar_call_ids;
    JobDescription job_description;
    KnowledgeManual manual;
    std::vector<ExampleDialogue> dialogues;
    AgentPlaybook playbook;
};

// Sample, rank, select exemplars, draft the job description, extract
// knowledge per topic, generate dialogues and compose the playbook.
CloneResult run_clone(const Corpus& corpus, const CloneConfig& config, TextModelAdapter& model);

// Every call_id cited anywhere in the playbook.
std::vector<std::string> cited_call_ids(const AgentPlaybook& pb);

Json to_json(const AgentTier& t);

}  // namespace voiceclone
