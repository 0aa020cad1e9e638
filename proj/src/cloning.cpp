#include "voiceclone/cloning.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>

#include "voiceclone/error.hpp"
#include "voiceclone/rng.hpp"
#include "voiceclone/text.hpp"

namespace voiceclone {

std::string_view to_string(Tier t) { return t == Tier::top ? "top" : "average"; }

Json to_json(const AgentTier& t) {
    return Json{{"agent_id", t.agent_id},
                {"conversion_rate", t.conversion_rate},
                {"duration_consistency", t.duration_consistency},
                {"quality_score", t.quality_score},
                {"tier", to_string(t.tier)}};
}

std::vector<CallRecord> sample_calls(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
    if (corpus.empty()) {
        throw ValidationError("empty corpus");
    }
    if (n == 0) {
        throw ValidationError("sample size must be at least 1");
    }
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.partial_shuffle(std::span<std::size_t>(order), n);
    order.resize(std::min(n, order.size()));

    std::vector<CallRecord> out;
    out.reserve(order.size());
    for (std::size_t i : order) {
        out.push_back(corpus.records[i]);
    }
    return out;
}

namespace {

double median_duration(std::span<const CallRecord> calls) {
    std::vector<std::int64_t> d;
    d.reserve(calls.size());
    for (const auto& c : calls) d.push_back(c.duration_ms);
    std::sort(d.begin(), d.end());
    const std::size_t k = d.size();
    if (k % 2 == 1) return static_cast<double>(d[k / 2]);
    return static_cast<double>(d[k / 2 - 1] + d[k / 2]) / 2.0;
}

}  // namespace

std::vector<AgentTier> tier_agents(std::span<const CallRecord> calls, double threshold, TierWeights weights) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ValidationError("tier threshold must lie in [0, 1]");
    }
    if (weights.conversion < 0.0 || weights.duration < 0.0) {
        throw ValidationError("tier weights must be non-negative");
    }
    if (calls.empty()) {
        throw ValidationError("empty corpus");
    }
    const double median = median_duration(calls);

    struct Acc {
        std::size_t calls = 0;
        std::size_t converted = 0;
        double deviation = 0.0;
    };
    std::map<std::string, Acc> per_agent;
    for (const auto& c : calls) {
        Acc& a = per_agent[c.agent_id];
        ++a.calls;
        a.converted += is_conversion(c.outcome) ? 1 : 0;
        a.deviation += std::abs(static_cast<double>(c.duration_ms) - median);
    }

    std::vector<AgentTier> out;
    for (const auto& [agent, a] : per_agent) {
        AgentTier t;
        t.agent_id = agent;
        t.conversion_rate = static_cast<double>(a.converted) / static_cast<double>(a.calls);
        const double normalised = a.deviation / static_cast<double>(a.calls) / median;
        t.duration_consistency = 1.0 - std::min(1.0, normalised);
        t.quality_score = weights.conversion * t.conversion_rate + weights.duration * t.duration_consistency;
        t.tier = t.quality_score >= threshold ? Tier::top : Tier::average;
        out.push_back(std::move(t));
    }
    return out;
}

bool exemplar_before(const CallRecord& a, const CallRecord& b) {
    const bool ca = is_conversion(a.outcome);
    const bool cb = is_conversion(b.outcome);
    if (ca != cb) return ca;
    if (a.duration_ms != b.duration_ms) return a.duration_ms > b.duration_ms;
    return a.call_id < b.call_id;
}

std::vector<CallRecord> select_exemplars(std::span<const CallRecord> calls, std::span<const AgentTier> tiers,
                                         std::size_t k) {
    if (k == 0) {
        throw ValidationError("exemplar count must be at least 1");
    }
    std::set<std::string> top;
    for (const auto& t : tiers) {
        if (t.tier == Tier::top) top.insert(t.agent_id);
    }
    if (top.empty()) {
        throw ValidationError("no top tier");
    }
    std::vector<CallRecord> out;
    for (const auto& c : calls) {
        if (top.contains(c.agent_id)) out.push_back(c);
    }
    std::sort(out.begin(), out.end(), exemplar_before);
    if (out.size() > k) out.resize(k);
    return out;
}

// ---- extraction ----------------------------------------------------------

namespace {

Json parse_adapter_output(const std::string& raw, const TextModelAdapter& model) {
    try {
        Json j = Json::parse(raw);
        if (!j.is_object()) throw ValidationError("expected a JSON object");
        return j;
    } catch (const std::exception& e) {
        throw AdapterError(model.name() + " adapter returned malformed output", false, e.what());
    }
}

std::set<std::string> id_set(std::span<const CallRecord> calls) {
    std::set<std::string> out;
    for (const auto& c : calls) out.insert(c.call_id);
    return out;
}

void check_cited(const std::vector<std::string>& cited, const std::set<std::string>& allowed,
                 const std::string& what, const TextModelAdapter& model) {
    if (cited.empty()) {
        throw AdapterError(model.name() + " adapter output cites no calls for " + what, false);
    }
    for (const auto& id : cited) {
        if (!allowed.contains(id)) {
            throw AdapterError(model.name() + " adapter cited unknown call " + id + " for " + what, false);
        }
    }
}

template <typename T, typename F>
T convert(const Json& j, F&& from_json, const TextModelAdapter& model) {
    try {
        return from_json(j);
    } catch (const std::exception& e) {
        throw AdapterError(model.name() + " adapter output does not match the schema", false, e.what());
    }
}

}  // namespace

JobDescription draft_job_description(std::span<const CallRecord> calls, TextModelAdapter& model) {
    if (calls.empty()) {
        throw ValidationError("job description needs at least one call");
    }
    const Json out = parse_adapter_output(model.complete(job_description_instruction(), calls), model);
    JobDescription jd = convert<JobDescription>(out, job_description_from_json, model);
    if (jd.tasks.empty() || jd.responsibilities.empty() || jd.style_notes.empty()) {
        throw AdapterError(model.name() + " adapter returned an incomplete job description", false);
    }
    check_cited(jd.source_call_ids, id_set(calls), "job description", model);
    return jd;
}

KnowledgeManual extract_knowledge(const CallsByTopic& calls_by_topic, TextModelAdapter& model) {
    for (const auto& [topic, calls] : calls_by_topic) {
        if (calls.empty()) {
            throw ValidationError("topic '" + topic + "' has no calls");
        }
    }

    auto extract_one = [&model](const std::string& topic, const std::vector<CallRecord>& calls) {
        return model.complete(knowledge_instruction(topic), calls);
    };

    std::map<std::string, std::string> raw;
    if (model.concurrent_safe() && calls_by_topic.size() > 1) {
        std::map<std::string, std::future<std::string>> pending;
        for (const auto& [topic, calls] : calls_by_topic) {
            pending.emplace(topic, std::async(std::launch::async, extract_one, std::cref(topic), std::cref(calls)));
        }
        for (auto& [topic, f] : pending) raw[topic] = f.get();
    } else {
        for (const auto& [topic, calls] : calls_by_topic) raw[topic] = extract_one(topic, calls);
    }

    KnowledgeManual manual;
    std::map<std::string, std::size_t> objection_index;
    for (const auto& [topic, text] : raw) {
        const Json out = parse_adapter_output(text, model);
        const auto allowed = id_set(calls_by_topic.at(topic));
        auto& facts = manual.topics[topic];
        try {
            for (const auto& f : out.at("facts")) {
                Fact fact = fact_from_json(f);
                fact.topic = topic;
                facts.push_back(std::move(fact));
            }
        } catch (const Json::exception& e) {
            throw AdapterError(model.name() + " adapter output does not match the schema", false, e.what());
        } catch (const ValidationError& e) {
            throw AdapterError(model.name() + " adapter output does not match the schema", false, e.what());
        }
        for (const auto& f : facts) {
            check_cited(f.source_call_ids, allowed, "fact '" + f.statement + "'", model);
        }
        for (const auto& o : out.value("objections", Json::array())) {
            ObjectionTactic tactic = convert<ObjectionTactic>(o, objection_from_json, model);
            check_cited(tactic.source_call_ids, allowed, "objection '" + tactic.objection + "'", model);
            auto it = objection_index.find(tactic.objection);
            if (it == objection_index.end()) {
                objection_index.emplace(tactic.objection, manual.objections.size());
                manual.objections.push_back(std::move(tactic));
            } else {
                auto& existing = manual.objections[it->second].source_call_ids;
                std::set<std::string> merged(existing.begin(), existing.end());
                merged.insert(tactic.source_call_ids.begin(), tactic.source_call_ids.end());
                existing.assign(merged.begin(), merged.end());
            }
        }
        for (const auto& s : out.value("closing_strategies", Json::array())) {
            const std::string strategy = s.get<std::string>();
            if (std::find(manual.closing_strategies.begin(), manual.closing_strategies.end(), strategy) ==
                manual.closing_strategies.end()) {
                manual.closing_strategies.push_back(strategy);
            }
        }
    }
    return manual;
}

std::vector<ExampleDialogue> generate_example_dialogues(std::span<const CallRecord> calls, TextModelAdapter& model) {
    if (calls.empty()) {
        throw ValidationError("dialogue generation needs at least one call");
    }
    const Json out = parse_adapter_output(model.complete(dialogue_instruction(), calls), model);
    const auto allowed = id_set(calls);
    std::vector<ExampleDialogue> dialogues;
    for (const auto& d : out.value("dialogues", Json::array())) {
        ExampleDialogue dialogue = convert<ExampleDialogue>(d, dialogue_from_json, model);
        auto problems = check_dialogue(dialogue);
        if (!problems.empty()) {
            throw AdapterError(model.name() + " adapter produced an invalid dialogue", false, problems.front());
        }
        check_cited(dialogue.source_call_ids, allowed, "dialogue", model);
        dialogues.push_back(std::move(dialogue));
    }
    return dialogues;
}

// ---- composition ---------------------------------------------------------

ComplianceRules default_compliance_rules() {
    return {
        {"Do not discuss topics outside the product scope",
         "Never invent offers or guarantee outcomes that have not been approved"},
        "Offer to remove the customer from the call list as soon as they ask",
        "Thank you for your time, Company X is always here for you",
    };
}

ContextSlots default_context_slots() {
    ContextSlots s;
    s.customer_plan_slot = "{{customer_plan}}";
    s.customer_tenure_slot = "{{customer_tenure}}";
    return s;
}

AgentPlaybook compose_playbook(const JobDescription& jd, const KnowledgeManual& manual,
                               const std::vector<ExampleDialogue>& dialogues, const ComplianceRules& compliance,
                               const ContextSlots& context, const PlaybookSettings& settings) {
    if (text::trim(compliance.removal_rule).empty() || !is_removal_rule(compliance.removal_rule)) {
        throw ValidationError("missing compliance rules: a call-list removal rule is required");
    }
    if (text::trim(compliance.closing_phrase).empty()) {
        throw ValidationError("missing compliance rules: a required closing phrase is needed");
    }

    AgentPlaybook pb;
    RoleDefinition& role = pb.role_definition;
    role.agent_name = settings.agent_name;
    role.company = settings.company;
    role.product = settings.product;
    role.primary_goal = jd.primary_goal && !text::trim(*jd.primary_goal).empty() ? *jd.primary_goal
                                                                                 : settings.primary_goal;

    pb.conversation_flow = default_conversation_flow();
    for (auto& step : pb.conversation_flow) {
        if (auto it = settings.flow_guidance.find(step.stage); it != settings.flow_guidance.end()) {
            step.guidance = it->second;
        }
    }
    if (!manual.closing_strategies.empty()) {
        FlowStep* closing = pb.stage(FlowStage::closing_followup);
        closing->guidance = text::as_sentence(closing->guidance) + " A closing that worked well: \"" +
                            manual.closing_strategies.front() + "\"";
    }

    pb.compliance_rules = compliance.rules;
    pb.compliance_rules.push_back(compliance.removal_rule);
    pb.compliance_rules.push_back("End every call with the required closing phrase \"" +
                                  compliance.closing_phrase + "\"");

    // Admit job-description and persona directives unless they repeat
    // something already in the prompt.
    std::vector<std::string> admitted;
    for (const auto& s : pb.conversation_flow) admitted.push_back(s.guidance);
    admitted.insert(admitted.end(), pb.compliance_rules.begin(), pb.compliance_rules.end());
    auto admit = [&](const std::string& item, std::vector<std::string>& into) {
        for (const auto& a : admitted) {
            if (trigram_overlap(a, item) >= settings.lint.redundancy_threshold) return;
        }
        admitted.push_back(item);
        into.push_back(item);
    };
    for (const auto& t : jd.tasks) admit(t, role.responsibilities);
    for (const auto& r : jd.responsibilities) admit(r, role.responsibilities);
    for (const auto& s : jd.style_notes) admit(s, pb.persona_style);
    for (const auto& s : settings.persona) admit(s, pb.persona_style);

    pb.objection_tactics = manual.objections;
    for (const auto& [topic, facts] : manual.topics) {
        for (const auto& f : facts) {
            auto same = std::find_if(pb.product_knowledge.begin(), pb.product_knowledge.end(),
                                     [&](const Fact& k) { return k.statement == f.statement; });
            if (same == pb.product_knowledge.end()) {
                pb.product_knowledge.push_back(f);
                continue;
            }
            std::set<std::string> merged(same->source_call_ids.begin(), same->source_call_ids.end());
            merged.insert(f.source_call_ids.begin(), f.source_call_ids.end());
            same->source_call_ids.assign(merged.begin(), merged.end());
        }
    }
    pb.terminology_rules = settings.terminology;
    pb.example_dialogues = dialogues;
    pb.context_slots = context;

    auto problems = check_playbook(pb);
    if (!problems.empty()) {
        throw ValidationError("composed playbook is invalid: " + problems.front());
    }
    const auto diags = lint_playbook(pb, settings.lint);
    for (const auto& d : diags) {
        if (d.severity == Severity::error) {
            throw ValidationError("composed playbook fails lint: " + std::string(to_string(d.code)) + " at " +
                                  d.location + ": " + d.message);
        }
    }
    return pb;
}

// ---- pipeline --------------------------------------------------------------

CloneResult run_clone(const Corpus& corpus, const CloneConfig& config, TextModelAdapter& model) {
    CloneResult result;
    const auto sampled = sample_calls(corpus, config.sample_n, config.seed);
    for (const auto& c : sampled) result.sampled_call_ids.push_back(c.call_id);

    result.tiers = tier_agents(sampled, config.tier_threshold, config.weights);
    const auto exemplars = select_exemplars(sampled, result.tiers, config.exemplar_k);
    for (const auto& c : exemplars) result.exemplar_call_ids.push_back(c.call_id);

    result.job_description = draft_job_description(exemplars, model);

    std::set<std::string> top;
    for (const auto& t : result.tiers) {
        if (t.tier == Tier::top) top.insert(t.agent_id);
    }
    CallsByTopic by_topic;
    for (const auto& topic : config.topics) {
        std::vector<CallRecord> calls;
        for (const auto& c : sampled) {
            if (c.has_tag(topic)) calls.push_back(c);
        }
        std::sort(calls.begin(), calls.end(), [&](const CallRecord& a, const CallRecord& b) {
            const bool ta = top.contains(a.agent_id);
            const bool tb = top.contains(b.agent_id);
            if (ta != tb) return ta;
            return exemplar_before(a, b);
        });
        if (calls.size() > config.topic_call_cap) calls.resize(config.topic_call_cap);
        by_topic[topic] = std::move(calls);
    }
    result.manual = extract_knowledge(by_topic, model);
    result.dialogues = generate_example_dialogues(exemplars, model);
    result.playbook = compose_playbook(result.job_description, result.manual, result.dialogues, config.compliance,
                                       config.context, config.playbook);
    return result;
}

std::vector<std::string> cited_call_ids(const AgentPlaybook& pb) {
    std::set<std::string> ids;
    for (const auto& f : pb.product_knowledge) ids.insert(f.source_call_ids.begin(), f.source_call_ids.end());
    for (const auto& o : pb.objection_tactics) ids.insert(o.source_call_ids.begin(), o.source_call_ids.end());
    for (const auto& d : pb.example_dialogues) ids.insert(d.source_call_ids.begin(), d.source_call_ids.end());
    return {ids.begin(), ids.end()};
}

}  // namespace voiceclone
