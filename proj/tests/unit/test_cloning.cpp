#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <set>
#include <thread>

#include "../support/harness.hpp"
#include "voiceclone/cloning.hpp"
#include "voiceclone/error.hpp"
#include "voiceclone/io.hpp"
#include "voiceclone/text.hpp"

using namespace voiceclone;
using vc_test::source_path;

namespace {

const Corpus& fixture() {
    static const Corpus c = load_corpus(source_path("fixtures/corpus.jsonl"));
    return c;
}

std::vector<std::string> ids(const std::vector<CallRecord>& calls) {
    std::vector<std::string> out;
    for (const auto& c : calls) out.push_back(c.call_id);
    return out;
}

CallRecord call(const std::string& id, const std::string& agent, Outcome o, std::int64_t duration = 10000) {
    CallRecord r;
    r.call_id = id;
    r.agent_id = agent;
    r.timestamp = "2025-01-01T00:00:00Z";
    r.duration_ms = duration;
    r.outcome = o;
    r.turns = {{Speaker::agent, "Hello ka.", 0, 100, Json::object()},
               {Speaker::customer, "Hi.", 200, 300, Json::object()}};
    return r;
}

// Completes topics in reverse order of submission.
class StaggeredModel final : public TextModelAdapter {
public:
    std::string name() const override { return "staggered"; }
    bool concurrent_safe() const override { return true; }
    std::string complete(std::string_view instruction, std::span<const CallRecord> transcripts) override {
        const int delay = 40 - 10 * calls_.fetch_add(1);
        std::this_thread::sleep_for(std::chrono::milliseconds(std::max(delay, 0)));
        return inner_.complete(instruction, transcripts);
    }

private:
    std::atomic<int> calls_{0};
    MockExtractor inner_{7};
};

class FailingModel final : public TextModelAdapter {
public:
    explicit FailingModel(std::string reply) : reply_(std::move(reply)) {}
    std::string name() const override { return "failing"; }
    std::string complete(std::string_view, std::span<const CallRecord>) override {
        if (reply_.empty()) throw AdapterError("backend unavailable", true, "HTTP 503");
        return reply_;
    }

private:
    std::string reply_;
};

}  // namespace

TEST_CASE("sample_calls matches the seeded reference") {
    const Json golden = parse_json_file(source_path("tests/golden/samples.json"));
    CHECK(ids(sample_calls(fixture(), 10, 7)) == golden.at("n10_seed7").get<std::vector<std::string>>());
    CHECK(ids(sample_calls(fixture(), 10, 8)) == golden.at("n10_seed8").get<std::vector<std::string>>());
    CHECK(ids(sample_calls(fixture(), 1000, 7)) == golden.at("n1000_seed7").get<std::vector<std::string>>());
    CHECK(ids(sample_calls(fixture(), 10, 7)) != ids(sample_calls(fixture(), 10, 8)));
    CHECK(ids(sample_calls(fixture(), 10, 7)) == ids(sample_calls(fixture(), 10, 7)));

    const auto all = ids(sample_calls(fixture(), 1000, 7));
    CHECK(all.size() == 50);
    CHECK(std::set<std::string>(all.begin(), all.end()).size() == 50);
}

TEST_CASE("sample_calls errors") {
    CHECK_THROWS_AS(sample_calls(Corpus{}, 10, 7), ValidationError);
    CHECK_THROWS_AS(sample_calls(fixture(), 0, 7), ValidationError);
}

TEST_CASE("tier_agents matches the golden tier table") {
    const Json golden = parse_json_file(source_path("tests/golden/tiers.json"));
    const auto tiers = tier_agents(fixture().records, 0.6);
    REQUIRE(tiers.size() == golden.size());
    for (std::size_t i = 0; i < tiers.size(); ++i) {
        const Json& g = golden[i];
        CHECK(tiers[i].agent_id == g.at("agent_id").get<std::string>());
        CHECK(tiers[i].conversion_rate == doctest::Approx(g.at("conversion_rate").get<double>()).epsilon(1e-12));
        CHECK(tiers[i].duration_consistency ==
              doctest::Approx(g.at("duration_consistency").get<double>()).epsilon(1e-12));
        CHECK(tiers[i].quality_score == doctest::Approx(g.at("quality_score").get<double>()).epsilon(1e-12));
        CHECK(to_string(tiers[i].tier) == g.at("tier").get<std::string>());
    }
}

TEST_CASE("tier_agents examples") {
    std::vector<CallRecord> calls;
    for (int i = 0; i < 4; ++i) calls.push_back(call("S" + std::to_string(i), "A", Outcome::sale));
    for (int i = 0; i < 3; ++i) calls.push_back(call("R" + std::to_string(i), "B", Outcome::rejection));
    const auto t = tier_agents(calls, 0.5, {1.0, 0.0});
    REQUIRE(t.size() == 2);
    CHECK(t[0].quality_score == 1.0);
    CHECK(t[0].tier == Tier::top);
    CHECK(t[1].quality_score == 0.0);
    CHECK(t[1].tier == Tier::average);

    CHECK_THROWS_AS(tier_agents(calls, 1.5), ValidationError);
    CHECK_THROWS_AS(tier_agents(calls, -0.1), ValidationError);
}

TEST_CASE("with weights (1, 0) the score is the recounted conversion rate") {
    const auto tiers = tier_agents(fixture().records, 0.6, {1.0, 0.0});
    for (const auto& t : tiers) {
        int calls = 0, converted = 0;
        for (const auto& r : fixture().records) {
            if (r.agent_id != t.agent_id) continue;
            ++calls;
            converted += is_conversion(r.outcome) ? 1 : 0;
        }
        CHECK(t.quality_score == static_cast<double>(converted) / calls);
    }
}

TEST_CASE("select_exemplars") {
    const auto tiers = tier_agents(fixture().records, 0.6);
    const Json golden = parse_json_file(source_path("tests/golden/exemplars_k5.json"));
    CHECK(ids(select_exemplars(fixture().records, tiers, 5)) == golden.get<std::vector<std::string>>());

    const auto chosen = select_exemplars(fixture().records, tiers, 40);
    std::set<std::string> top;
    for (const auto& t : tiers)
        if (t.tier == Tier::top) top.insert(t.agent_id);
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        CHECK(top.contains(chosen[i].agent_id));
        if (i > 0) CHECK_FALSE(exemplar_before(chosen[i], chosen[i - 1]));
    }

    std::vector<CallRecord> calls;
    for (int i = 0; i < 10; ++i) calls.push_back(call("T" + std::to_string(i), "top", Outcome::sale));
    calls.push_back(call("Z", "avg", Outcome::rejection));
    const auto few_tiers = tier_agents(calls, 0.5, {1.0, 0.0});
    CHECK(select_exemplars(calls, few_tiers, 40).size() == 10);

    std::vector<CallRecord> pair = {call("P1", "top", Outcome::sale, 10000), call("P2", "top", Outcome::sale, 20000)};
    CHECK(ids(select_exemplars(pair, tier_agents(pair, 0.5, {1.0, 0.0}), 2)) ==
          std::vector<std::string>{"P2", "P1"});

    std::vector<CallRecord> none = {call("N1", "x", Outcome::rejection)};
    CHECK_THROWS_WITH_AS(select_exemplars(none, tier_agents(none, 0.5, {1.0, 0.0}), 5), "no top tier",
                         ValidationError);
}

TEST_CASE("draft_job_description") {
    MockExtractor model(7);
    const CallRecord& first = fixture().records.front();
    const JobDescription jd = draft_job_description(std::span<const CallRecord>(&first, 1), model);
    CHECK_FALSE(jd.tasks.empty());
    CHECK_FALSE(jd.responsibilities.empty());
    CHECK_FALSE(jd.style_notes.empty());
    CHECK(std::any_of(jd.tasks.begin(), jd.tasks.end(),
                      [](const std::string& t) { return t.find("Present the fiber offer") != std::string::npos; }));
    CHECK(jd.source_call_ids == std::vector<std::string>{first.call_id});
    CHECK(draft_job_description(std::span<const CallRecord>(&first, 1), model) == jd);

    CHECK_THROWS_AS(draft_job_description({}, model), ValidationError);

    FailingModel down("");
    try {
        draft_job_description(fixture().records, down);
        FAIL("expected AdapterError");
    } catch (const AdapterError& e) {
        CHECK(e.retriable());
        CHECK(e.diagnostics() == "HTTP 503");
    }
    FailingModel garbage("this is not json");
    try {
        draft_job_description(fixture().records, garbage);
        FAIL("expected AdapterError");
    } catch (const AdapterError& e) {
        CHECK_FALSE(e.retriable());
    }
}

TEST_CASE("extract_knowledge") {
    CallsByTopic by_topic;
    for (const auto& r : fixture().records) {
        for (const auto& tag : r.topic_tags) {
            if (tag == "price" || tag == "speed") by_topic[tag].push_back(r);
        }
    }
    MockExtractor model(7);
    const KnowledgeManual manual = extract_knowledge(by_topic, model);
    CHECK(manual.topics.size() == 2);
    CHECK(manual.topics.contains("price"));
    CHECK(manual.topics.contains("speed"));
    for (const auto& [topic, facts] : manual.topics) {
        std::set<std::string> allowed;
        for (const auto& r : by_topic.at(topic)) allowed.insert(r.call_id);
        for (const auto& f : facts) {
            CHECK_FALSE(f.source_call_ids.empty());
            for (const auto& id : f.source_call_ids) CHECK(allowed.contains(id));
        }
    }
    CHECK(std::any_of(manual.objections.begin(), manual.objections.end(),
                      [](const ObjectionTactic& o) { return text::contains_word(o.objection, "price"); }));
    std::set<std::string> labels;
    for (const auto& o : manual.objections) CHECK(labels.insert(o.objection).second);
    CHECK(extract_knowledge(by_topic, model) == manual);

    StaggeredModel staggered;
    CHECK(extract_knowledge(by_topic, staggered) == manual);

    CallsByTopic with_empty = by_topic;
    with_empty["contract"] = {};
    CHECK_THROWS_WITH_AS(extract_knowledge(with_empty, model), doctest::Contains("contract"), ValidationError);
}

TEST_CASE("generate_example_dialogues") {
    const auto tiers = tier_agents(fixture().records, 0.6);
    const auto exemplars = select_exemplars(fixture().records, tiers, 40);
    MockExtractor model(7);
    const auto dialogues = generate_example_dialogues(exemplars, model);
    std::set<DialogueStage> stages;
    for (const auto& d : dialogues) {
        stages.insert(d.stage);
        CHECK(d.turns.size() <= kMaxDialogueTurns);
        CHECK(check_dialogue(d).empty());
        if (d.stage == DialogueStage::opening || d.stage == DialogueStage::closing) {
            REQUIRE_FALSE(d.turns.empty());
            CHECK(d.turns.front().speaker == Speaker::agent);
        }
    }
    CHECK(stages.size() == kDialogueStageCount);
    CHECK_THROWS_AS(generate_example_dialogues({}, model), ValidationError);
}

TEST_CASE("clone pipeline reproduces the golden playbook") {
    const std::string golden = read_text_file(source_path("tests/golden/playbook.json"));
    CloneConfig cfg;
    cfg.seed = 7;
    for (int run = 0; run < 2; ++run) {
        MockExtractor model(cfg.seed);
        const CloneResult r = run_clone(fixture(), cfg, model);
        CHECK(playbook_to_canonical_json(r.playbook) == golden);
        CHECK(check_playbook(r.playbook).empty());
        CHECK_FALSE(has_errors(lint_playbook(r.playbook)));

        std::set<std::string> sampled(r.sampled_call_ids.begin(), r.sampled_call_ids.end());
        for (const auto& id : cited_call_ids(r.playbook)) CHECK(fixture().find(id) != nullptr);
        for (const auto& id : r.job_description.source_call_ids) CHECK(sampled.contains(id));
    }
}

TEST_CASE("composition injects the configured goal and requires compliance") {
    const auto tiers = tier_agents(fixture().records, 0.6);
    const auto exemplars = select_exemplars(fixture().records, tiers, 40);
    MockExtractor model(7);
    JobDescription jd = draft_job_description(exemplars, model);
    jd.primary_goal.reset();
    CallsByTopic by_topic{{"price", {}}};
    for (const auto& r : fixture().records)
        if (r.has_tag("price")) by_topic["price"].push_back(r);
    const KnowledgeManual manual = extract_knowledge(by_topic, model);
    const auto dialogues = generate_example_dialogues(exemplars, model);

    PlaybookSettings settings;
    const AgentPlaybook pb = compose_playbook(jd, manual, dialogues, default_compliance_rules(),
                                              default_context_slots(), settings);
    CHECK(pb.role_definition.primary_goal == settings.primary_goal);
    CHECK_FALSE(has_errors(lint_playbook(pb)));

    ComplianceRules missing = default_compliance_rules();
    missing.removal_rule.clear();
    CHECK_THROWS_AS(compose_playbook(jd, manual, dialogues, missing, default_context_slots(), settings),
                    ValidationError);
    ComplianceRules no_closing = default_compliance_rules();
    no_closing.closing_phrase.clear();
    CHECK_THROWS_AS(compose_playbook(jd, manual, dialogues, no_closing, default_context_slots(), settings),
                    ValidationError);
}

TEST_CASE("external text model is configuration only") {
    ExternalTextModel unconfigured(ExternalModelConfig{});
    CHECK_THROWS_AS(unconfigured.complete("TASK: knowledge", fixture().records), AdapterError);
    CHECK_THROWS_AS(make_text_model("gpt", 1), ValidationError);
    CHECK(make_text_model("mock", 1)->name() == "mock");
}
