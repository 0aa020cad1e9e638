#include <doctest.h>

#include <set>

#include "../support/harness.hpp"
#include "voiceclone/cloning.hpp"
#include "voiceclone/error.hpp"
#include "voiceclone/io.hpp"
#include "voiceclone/playbook.hpp"

using namespace voiceclone;
using vc_test::golden_playbook;
using vc_test::inject_defect;

namespace {

const SlotValues kSlots = {{"agent_name", "Arisa"},
                           {"agent_id", "A01"},
                           {"customer_plan", "standard 100 Mbps"},
                           {"customer_tenure", "two years"}};

std::vector<std::string> codes(const std::vector<LintDiagnostic>& diags) {
    std::vector<std::string> out;
    for (const auto& d : diags) out.emplace_back(to_string(d.code));
    return out;
}

}  // namespace

TEST_CASE("golden playbook is valid and lint clean") {
    const AgentPlaybook pb = golden_playbook();
    CHECK(check_playbook(pb).empty());
    CHECK(lint_playbook(pb).empty());
    CHECK(pb.conversation_flow.size() == 5);
    CHECK(std::any_of(pb.compliance_rules.begin(), pb.compliance_rules.end(),
                      [](const std::string& r) { return is_removal_rule(r); }));
}

TEST_CASE("render has every section in order, substituted slots and no list markers") {
    const AgentPlaybook pb = golden_playbook();
    const std::string prompt = render_system_prompt(pb, kSlots);
    CHECK(prompt.find("Arisa") != std::string::npos);
    CHECK(prompt.find("{{") == std::string::npos);
    CHECK_FALSE(has_list_marker(prompt));
    std::size_t at = 0;
    for (const auto& title : kSectionTitles) {
        const auto pos = prompt.find(std::string(title) + "\n");
        REQUIRE_MESSAGE(pos != std::string::npos, title);
        CHECK(pos >= at);
        at = pos;
    }
    for (const auto& o : pb.objection_tactics) CHECK(prompt.find(o.tactic) != std::string::npos);
    for (const auto& f : pb.product_knowledge) CHECK(prompt.find(f.statement) != std::string::npos);
    for (const auto& t : pb.terminology_rules) CHECK(prompt.find(t.jargon) != std::string::npos);
    CHECK(prompt.find("standard 100 Mbps") != std::string::npos);
    CHECK(prompt.find("two years") != std::string::npos);
    CHECK(render_system_prompt(pb, kSlots) == prompt);
}

TEST_CASE("render sentinels land in their sections") {
    SlotValues sentinels = {{"agent_name", "ZZNAMEZZ"},
                            {"agent_id", "ZZIDZZ"},
                            {"customer_plan", "ZZPLANZZ"},
                            {"customer_tenure", "ZZTENUREZZ"}};
    const std::string prompt = render_system_prompt(golden_playbook(), sentinels);
    const auto context = prompt.find(std::string(kSectionTitles[8]));
    CHECK(prompt.find("ZZNAMEZZ") < prompt.find(std::string(kSectionTitles[1])));
    CHECK(prompt.find("ZZIDZZ", context) != std::string::npos);
    CHECK(prompt.find("ZZPLANZZ", context) != std::string::npos);
    CHECK(prompt.find("ZZTENUREZZ", context) != std::string::npos);
}

TEST_CASE("render names a missing slot") {
    SlotValues missing = kSlots;
    missing.erase("customer_plan");
    CHECK_THROWS_WITH_AS(render_system_prompt(golden_playbook(), missing), doctest::Contains("customer_plan"),
                         ValidationError);
}

TEST_CASE("each seeded defect yields exactly its code") {
    const AgentPlaybook pb = golden_playbook();
    for (LintCode code : {LintCode::AMBIGUOUS_OBJECTIVE, LintCode::REDUNDANT_INSTRUCTIONS,
                          LintCode::FORMATTING_ARTEFACTS, LintCode::OVERCAUTIOUS_POLITENESS}) {
        CAPTURE(to_string(code));
        const auto diags = lint_playbook(inject_defect(pb, code));
        CHECK(codes(diags) == std::vector<std::string>{std::string(to_string(code))});
    }
}

TEST_CASE("lint examples") {
    AgentPlaybook pb = golden_playbook();
    pb.stage(FlowStage::pitch)->guidance = "1. Say hello";
    auto d = lint_playbook(pb);
    REQUIRE(d.size() == 1);
    CHECK(d[0].code == LintCode::FORMATTING_ARTEFACTS);
    CHECK(d[0].severity == Severity::error);
    CHECK(d[0].location == "conversation_flow.pitch");

    AgentPlaybook empty_goal = golden_playbook();
    empty_goal.role_definition.primary_goal = "";
    d = lint_playbook(empty_goal);
    REQUIRE(d.size() == 1);
    CHECK(d[0].code == LintCode::AMBIGUOUS_OBJECTIVE);
    CHECK(d[0].severity == Severity::error);
    CHECK(has_errors(d));

    CHECK(has_list_marker("- item"));
    CHECK(has_list_marker("\xE2\x80\xA2 bullet"));
    CHECK(has_list_marker("Point number two is price"));
    CHECK(has_list_marker("intro\n2) second"));
    CHECK_FALSE(has_list_marker("It costs 599 baht. Installation is free."));
}

TEST_CASE("lint thresholds") {
    CHECK(trigram_overlap("keep each turn short", "keep each turn short please") == 1.0);
    CHECK(trigram_overlap("a b", "a b") == 0.0);
    CHECK(trigram_overlap("one two three four", "five six seven eight") == 0.0);
    // 3 of the 4 trigrams of the shorter directive are shared.
    CHECK(trigram_overlap("alpha beta gamma delta epsilon zeta", "alpha beta gamma delta epsilon eta") == 0.75);

    AgentPlaybook pb = golden_playbook();
    // The golden has 2 politeness directives against 4 steering examples.
    LintConfig strict;
    strict.politeness_ratio = 0.5;
    CHECK(lint_playbook(pb, strict).empty());
    strict.politeness_ratio = 0.4;
    const auto d = lint_playbook(pb, strict);
    CHECK(codes(d) == std::vector<std::string>{"OVERCAUTIOUS_POLITENESS"});
}

TEST_CASE("lint is deterministic and order stable") {
    AgentPlaybook pb = inject_defect(inject_defect(golden_playbook(), LintCode::FORMATTING_ARTEFACTS),
                                     LintCode::REDUNDANT_INSTRUCTIONS);
    const auto a = lint_playbook(pb);
    CHECK(a == lint_playbook(pb));
    CHECK(codes(a) == std::vector<std::string>{"FORMATTING_ARTEFACTS", "REDUNDANT_INSTRUCTIONS"});
}

TEST_CASE("lint-clean playbooks render without list markers") {
    const AgentPlaybook pb = golden_playbook();
    for (LintCode code : {LintCode::REDUNDANT_INSTRUCTIONS, LintCode::OVERCAUTIOUS_POLITENESS}) {
        const AgentPlaybook p = inject_defect(pb, code);
        REQUIRE_FALSE(has_errors(lint_playbook(p)));
        CHECK_FALSE(has_list_marker(render_system_prompt(p, kSlots)));
    }
}

TEST_CASE("canonical json round trip") {
    const AgentPlaybook pb = golden_playbook();
    CHECK(roundtrip(pb) == pb);
    const std::string text = playbook_to_canonical_json(pb);
    CHECK(text.find('\r') == std::string::npos);
    CHECK(text.back() == '\n');
    CHECK(playbook_to_canonical_json(roundtrip(pb)) == text);
}

TEST_CASE("playbook parse errors") {
    const Json good = to_json(golden_playbook());

    Json reordered = good;
    std::swap(reordered["conversation_flow"][0], reordered["conversation_flow"][1]);
    CHECK_THROWS_WITH_AS(playbook_from_json(reordered), doctest::Contains("stage order"), ValidationError);

    Json missing = good;
    missing.erase("compliance_rules");
    CHECK_THROWS_WITH_AS(playbook_from_json(missing), doctest::Contains("compliance_rules"), ValidationError);

    Json unknown = good;
    unknown["bonus_section"] = Json::array();
    CHECK_THROWS_WITH_AS(playbook_from_json(unknown), doctest::Contains("bonus_section"), ValidationError);

    Json bad_slot = good;
    bad_slot["context_slots"]["agent_id_slot"] = "{agent_id}";
    CHECK_THROWS_AS(playbook_from_json(bad_slot), ValidationError);

    Json no_removal = good;
    Json rules = Json::array();
    for (const auto& r : good.at("compliance_rules")) {
        if (!is_removal_rule(r.get<std::string>())) rules.push_back(r);
    }
    no_removal["compliance_rules"] = rules;
    CHECK_THROWS_AS(playbook_from_json(no_removal), ValidationError);
}

TEST_CASE("fine-tune export") {
    KnowledgeManual manual;
    for (int i = 0; i < 10; ++i) {
        manual.topics["price"].push_back({"Fact number " + std::to_string(i) + " costs 599 baht.", {"C001"}, "price"});
    }
    for (int i = 0; i < 12; ++i) {
        manual.objections.push_back({"objection " + std::to_string(i), "tactic " + std::to_string(i), {"C002"}});
    }
    const auto pairs = export_finetune_dataset(manual);
    std::size_t facts = 0, objections = 0;
    for (const auto& p : pairs) {
        CHECK_FALSE(p.question.empty());
        CHECK_FALSE(p.answer.empty());
        if (p.source.rfind("fact:", 0) == 0) ++facts;
        if (p.source.rfind("objection:", 0) == 0) ++objections;
    }
    CHECK(facts == 10);
    CHECK(objections == 12);
    CHECK(pairs.front().source == "fact:price:0");
    CHECK(export_finetune_dataset(manual, 3).size() == 3 + 12);

    const std::string jsonl = finetune_jsonl(pairs);
    std::size_t lines = 0;
    for (char c : jsonl) lines += c == '\n' ? 1 : 0;
    CHECK(lines == pairs.size());
    CHECK(Json::parse(jsonl.substr(0, jsonl.find('\n'))).contains("question"));

    CHECK_THROWS_AS(export_finetune_dataset(manual, 0), ValidationError);
    CHECK_THROWS_AS(export_finetune_dataset(KnowledgeManual{}), ValidationError);
}
