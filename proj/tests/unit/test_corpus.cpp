#include <doctest.h>

#include <numeric>

#include "../support/harness.hpp"
#include "voiceclone/corpus.hpp"
#include "voiceclone/error.hpp"
#include "voiceclone/io.hpp"
#include "voiceclone/rng.hpp"

using namespace voiceclone;
using vc_test::source_path;

namespace {

CallRecord sample_record(const std::string& id = "X1") {
    CallRecord r;
    r.call_id = id;
    r.agent_id = "A1";
    r.timestamp = "2025-03-02T10:07:00Z";
    r.duration_ms = 5000;
    r.outcome = Outcome::sale;
    r.topic_tags = {"price"};
    r.turns = {{Speaker::agent, "Hello ka.", 0, 1000, Json::object()},
               {Speaker::customer, "Hi.", 1200, 2000, Json::object()},
               {Speaker::agent, "Shall I book it?", 2100, 3000, Json::object()}};
    return r;
}

std::string line_of(const CallRecord& r) { return to_json(r).dump() + "\n"; }

}  // namespace

TEST_CASE("fixture corpus loads and matches golden stats") {
    const Corpus corpus = load_corpus(source_path("fixtures/corpus.jsonl"));
    CHECK(corpus.size() == 50);
    CHECK(corpus.diagnostics.empty());
    const Json golden = parse_json_file(source_path("tests/golden/corpus_stats.json"));
    const Json stats = to_json(corpus_stats(corpus));
    CHECK(stats.at("total_calls") == golden.at("total_calls"));
    CHECK(stats.at("calls_per_agent") == golden.at("calls_per_agent"));
    CHECK(stats.at("outcome_distribution") == golden.at("outcome_distribution"));
    CHECK(stats.at("mean_duration_ms").get<double>() ==
          doctest::Approx(golden.at("mean_duration_ms").get<double>()).epsilon(1e-12));
}

TEST_CASE("three valid lines") {
    const Corpus c = parse_corpus(line_of(sample_record("a")) + line_of(sample_record("b")) + line_of(sample_record("c")));
    CHECK(c.size() == 3);
    CHECK(c.diagnostics.empty());
}

TEST_CASE("truncated line yields a diagnostic on its line") {
    std::string text = line_of(sample_record("a")) + line_of(sample_record("b"));
    const std::string third = to_json(sample_record("c")).dump();
    text += third.substr(0, third.size() / 2) + "\n";
    const Corpus c = parse_corpus(text);
    CHECK(c.size() == 2);
    REQUIRE(c.diagnostics.size() == 1);
    CHECK(c.diagnostics[0].line == 3);
}

TEST_CASE("duplicate call ids and invalid records are diagnosed, not dropped silently") {
    CallRecord bad = sample_record("z");
    bad.turns[1].end_ms = 10;
    const Corpus c = parse_corpus(line_of(sample_record("a")) + line_of(sample_record("a")) + line_of(bad));
    CHECK(c.size() == 1);
    REQUIRE(c.diagnostics.size() == 2);
    CHECK(c.diagnostics[0].line == 2);
    CHECK(c.diagnostics[1].line == 3);
}

TEST_CASE("unreadable corpus file is fatal") {
    CHECK_THROWS_AS(load_corpus(source_path("fixtures/does_not_exist.jsonl")), Error);
}

TEST_CASE("validate_record examples") {
    CHECK(validate_record(sample_record()).empty());

    CallRecord r = sample_record();
    r.turns[2].end_ms = 2000;
    CHECK(validate_record(r) == std::vector<Violation>{{"turns[2].end_ms", "end precedes start"}});

    CallRecord q = sample_record();
    q.turns.erase(q.turns.begin() + 1);
    CHECK(validate_record(q) == std::vector<Violation>{{"turns", "no customer turn"}});
}

TEST_CASE("validate_record flags every generated mutation") {
    using Mutation = void (*)(CallRecord&);
    const std::vector<std::pair<const char*, Mutation>> mutations = {
        {"call_id", [](CallRecord& r) { r.call_id = "  "; }},
        {"agent_id", [](CallRecord& r) { r.agent_id = ""; }},
        {"timestamp", [](CallRecord& r) { r.timestamp = "2025-03-02 10:07:00"; }},
        {"duration_ms", [](CallRecord& r) { r.duration_ms = 0; }},
        {"duration_ms", [](CallRecord& r) { r.duration_ms = 2500; }},
        {"turns[0].start_ms", [](CallRecord& r) { r.turns[0].start_ms = -1; }},
        {"turns[1].text", [](CallRecord& r) { r.turns[1].text = " \t"; }},
        {"turns[2].start_ms", [](CallRecord& r) { r.turns[2].start_ms = 100; r.turns[2].end_ms = 3000; }},
        {"turns", [](CallRecord& r) { for (auto& t : r.turns) t.speaker = Speaker::customer; }},
    };
    Rng rng(11);
    for (int round = 0; round < 50; ++round) {
        const auto& [field, mutate] = mutations[rng.below(mutations.size())];
        CallRecord r = sample_record();
        mutate(r);
        const auto v = validate_record(r);
        REQUIRE_FALSE(v.empty());
        CHECK(std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.field == field; }));
    }
}

TEST_CASE("corpus_stats examples") {
    CallRecord a = sample_record("a");
    CallRecord b = sample_record("b");
    b.outcome = Outcome::rejection;
    Corpus c;
    c.records = {a, b};
    const CorpusStats s = corpus_stats(c);
    CHECK(s.total_calls == 2);
    CHECK(s.outcome_distribution == std::map<std::string, std::size_t>{{"sale", 1}, {"rejection", 1}});

    CallRecord one = sample_record("one");
    one.duration_ms = 60000;
    Corpus single;
    single.records = {one};
    CHECK(corpus_stats(single).mean_duration_ms == 60000.0);

    CHECK_THROWS_WITH_AS(corpus_stats(Corpus{}), "empty corpus", ValidationError);
}

TEST_CASE("stats counts sum to total") {
    const Corpus corpus = load_corpus(source_path("fixtures/corpus.jsonl"));
    const CorpusStats s = corpus_stats(corpus);
    auto sum = [](const std::map<std::string, std::size_t>& m) {
        return std::accumulate(m.begin(), m.end(), std::size_t{0}, [](std::size_t acc, const auto& kv) { return acc + kv.second; });
    };
    CHECK(sum(s.calls_per_agent) == s.total_calls);
    CHECK(sum(s.outcome_distribution) == s.total_calls);
}

TEST_CASE("load serialize load round-trips, unknown keys included") {
    Json j = to_json(sample_record("r"));
    j["crm_segment"] = "gold";
    j["turns"][0]["sentiment"] = 0.4;
    const Corpus first = parse_corpus(j.dump() + "\n" + line_of(sample_record("s")));
    REQUIRE(first.size() == 2);
    const Corpus second = parse_corpus(serialize_corpus(first));
    CHECK(second.records == first.records);
    CHECK(second.records[0].extra.at("crm_segment") == "gold");
    CHECK(second.records[0].turns[0].extra.at("sentiment") == 0.4);

    const Corpus fixture = load_corpus(source_path("fixtures/corpus.jsonl"));
    CHECK(parse_corpus(serialize_corpus(fixture)).records == fixture.records);
}
