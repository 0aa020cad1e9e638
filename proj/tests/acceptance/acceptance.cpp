// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "../support/harness.hpp"
#include "voiceclone/evaluation.hpp"
#include "voiceclone/io.hpp"
#include "voiceclone/playbook.hpp"

using namespace voiceclone;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr int kEchoSeconds = 60;
constexpr double kEchoMaxRtf = 1.0;
constexpr double kEchoMaxWallS = 30.0;
constexpr double kCloneMaxWallS = 10.0;
constexpr double kAggregateRelTol = 1e-9;
constexpr double kObjectionPct = 20.0;
constexpr double kObjectionPctTol = 0.1;
constexpr std::size_t kBargeInRuns = 100;
constexpr std::size_t kBargeInMaxFrames = 5;

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Command {
    int status = -1;
    std::string out;
};

std::string quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

// Runs the CLI from the source tree so the default config paths resolve.
Command cli(const std::string& args) {
    const std::string cmd = "cd " + quote(VC_SOURCE_DIR) + " && " + quote(std::string(VC_BINARY_DIR) + "/voiceclone") +
                            " -q " + args + " 2>&1";
    Command c;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return c;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) c.out.append(buf.data(), n);
    const int raw = pclose(pipe);
    c.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return c;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool close_rel(double a, double b) {
    return std::fabs(a - b) <= kAggregateRelTol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

Verdict echo_fidelity() {
    GatewayConfig g = vc_test::test_gateway_config();
    g.pacing_ms = 0;
    g.processing_delay_ms = 50;
    vc_test::LocalGateway gw(g);
    const auto run = vc_test::run_echo_loopback(gw.port(), kEchoSeconds);
    std::ostringstream d;
    d << "frames " << run.frames_received << "/" << run.frames_sent << ", identical=" << run.audio_identical
      << ", gapless=" << run.seq_gapless << ", dropped=" << run.frames_dropped << ", rtf=" << run.rtf
      << ", wall=" << run.wall_s << "s";
    if (!run.error.empty()) d << ", error: " << run.error;
    const bool pass = run.error.empty() && run.frames_sent == kEchoSeconds * 50u &&
                      run.frames_received == run.frames_sent && run.audio_identical && run.seq_gapless &&
                      run.frames_dropped == 0 && run.rtf < kEchoMaxRtf && run.wall_s < kEchoMaxWallS;
    return {pass, d.str()};
}

Verdict clone_determinism() {
    const fs::path dir = vc_test::scratch_dir("acceptance_clone");
    const std::string golden = read_text_file(vc_test::source_path("tests/golden/playbook.json"));
    std::ostringstream d;
    bool pass = true;
    for (int i = 0; i < 3; ++i) {
        const fs::path out = dir / ("playbook_" + std::to_string(i) + ".json");
        const auto t0 = Clock::now();
        const Command c = cli("clone --seed 7 --corpus fixtures/corpus.jsonl --out " + quote(out.string()));
        const double wall = seconds_since(t0);
        const bool same = c.status == 0 && fs::exists(out) && read_text_file(out) == golden;
        d << "run" << i + 1 << (same ? " identical" : " differs") << " (" << wall << "s) ";
        pass = pass && same && wall < kCloneMaxWallS;
    }
    const std::string prompt = render_system_prompt(vc_test::golden_playbook(), GatewayConfig{}.slot_values);
    std::size_t sections = 0;
    for (const auto& title : kSectionTitles) {
        const std::string head = std::string(title) + "\n";
        if (prompt.rfind(head, 0) == 0 || prompt.find("\n" + head) != std::string::npos) ++sections;
    }
    const bool markers = has_list_marker(prompt);
    d << "sections=" << sections << " list_markers=" << (markers ? 1 : 0);
    return {pass && sections == 9 && !markers, d.str()};
}

Verdict lint_defects() {
    const AgentPlaybook golden = vc_test::golden_playbook();
    std::ostringstream d;
    const auto clean = lint_playbook(golden);
    bool pass = clean.empty();
    d << "golden findings=" << clean.size();
    int detected = 0;
    for (LintCode code : {LintCode::AMBIGUOUS_OBJECTIVE, LintCode::REDUNDANT_INSTRUCTIONS, LintCode::FORMATTING_ARTEFACTS,
                          LintCode::OVERCAUTIOUS_POLITENESS}) {
        const auto diags = lint_playbook(vc_test::inject_defect(golden, code));
        std::set<LintCode> codes;
        for (const auto& x : diags) codes.insert(x.code);
        if (codes == std::set<LintCode>{code}) ++detected;
        else d << ", " << to_string(code) << " gave " << diags.size() << " findings";
    }
    d << ", detected " << detected << "/4";
    return {pass && detected == 4, d.str()};
}

Verdict rubric_integrity() {
    const Rubric r = load_rubric(vc_test::source_path("data/rubric.json"));
    bool shape = r.categories.size() == kRubricCategories.size() && r.criterion_count() == kRubricCriteria &&
                 r.scale_min == 1 && r.scale_max == 5;
    for (std::size_t i = 0; shape && i < r.categories.size(); ++i) shape = r.categories[i].name == kRubricCategories[i];

    auto sheet = [](const std::string& label) {
        ScoreSheet s{"ev", label, {}};
        for (int id = 1; id <= 22; ++id) s.scores.emplace_back(id, 3);
        return s;
    };
    std::vector<ScoreSheet> bad;
    bad.push_back(sheet("R01"));
    bad.back().scores.pop_back();  // missing criterion 22
    bad.push_back(sheet("R01"));
    bad.back().scores[0].second = 6;
    bad.push_back(sheet("R01"));
    bad.back().scores[0].second = 0;
    bad.push_back(sheet("R01"));
    bad.back().scores.emplace_back(3, 3);
    bad.push_back(sheet("R01"));
    bad.back().scores.emplace_back(23, 3);
    bad.push_back(sheet("R99"));
    const auto res = ingest_score_sheets({"R01"}, bad, r);
    const auto good = ingest_score_sheets({"R01"}, {sheet("R01")}, r);

    std::ostringstream d;
    d << "categories=" << r.categories.size() << " criteria=" << r.criterion_count() << " scale=" << r.scale_min << "-"
      << r.scale_max << ", rejected " << res.rejected.size() << "/" << bad.size() << " violating sheets";
    return {shape && res.accepted.empty() && res.rejected.size() == bad.size() && good.accepted.size() == 1, d.str()};
}

Verdict aggregation_oracle() {
    const Rubric rubric = load_rubric(vc_test::source_path("data/rubric.json"));
    std::size_t compared = 0;
    std::size_t mismatched = 0;
    for (const std::string v : {"v1", "v2"}) {
        const fs::path dir = vc_test::source_path("fixtures/eval/" + v);
        const auto key = key_from_json(parse_json_file(dir / "key.json"));
        const auto sheets = parse_score_csv(read_text_file(dir / "scores.csv"));
        const Json got = to_json(aggregate_scores(sheets, key, rubric).report);
        const Json golden = parse_json_file(vc_test::source_path("tests/golden/aggregate_" + v + ".json"));
        if (got.at("cells").size() != golden.at("cells").size()) return {false, v + ": cell count differs"};
        for (std::size_t i = 0; i < golden.at("cells").size(); ++i) {
            const Json& g = golden["cells"][i];
            const Json& c = got["cells"][i];
            for (const char* k : {"overall_mean", "overall_std"}) {
                ++compared;
                if (!close_rel(c.at(k), g.at(k))) ++mismatched;
            }
            for (std::size_t k = 0; k < g.at("categories").size(); ++k) {
                for (const char* f : {"mean", "std"}) {
                    ++compared;
                    if (!close_rel(c["categories"][k].at(f), g["categories"][k].at(f))) ++mismatched;
                }
            }
        }
    }

    const fs::path dir = vc_test::scratch_dir("acceptance_report");
    bool cli_ok = true;
    for (const std::string v : {"v1", "v2"}) {
        const Command c = cli("aggregate --key fixtures/eval/" + v + "/key.json --scores fixtures/eval/" + v +
                              "/scores.csv --out " + quote((dir / v).string()));
        cli_ok = cli_ok && c.status == 0;
    }
    const Command cmp = cli("report --format text --compare " + quote((dir / "v1" / "report.json").string()) + " " +
                            quote((dir / "v2" / "report.json").string()));
    const std::string prefix = "all\tai\tObjection handling\t";
    std::string row;
    double pct = NAN;
    std::istringstream lines(cmp.out);
    for (std::string line; std::getline(lines, line);) {
        if (line.rfind(prefix, 0) != 0) continue;
        row = line;
        pct = std::strtod(line.c_str() + prefix.size(), nullptr);
    }
    std::ostringstream d;
    d << mismatched << "/" << compared << " values off by more than " << kAggregateRelTol
      << " relative; report --compare objection handling (all, ai): "
      << (row.empty() ? std::string("missing") : row.substr(row.find("Objection")));
    const bool pct_ok = std::fabs(pct - kObjectionPct) <= kObjectionPctTol;
    return {compared > 0 && mismatched == 0 && cli_ok && cmp.status == 0 && pct_ok, d.str()};
}

Verdict blinding() {
    const fs::path out = vc_test::scratch_dir("acceptance_blind");
    const Command c = cli("blind --seed 42 fixtures/eval/v1/recordings --out " + quote(out.string()));
    if (c.status != 0) return {false, "blind exited " + std::to_string(c.status) + ": " + c.out};
    const std::string packet = read_text_file(out / "packet.json");
    std::size_t leaks = 0;
    for (const std::string token : {"agent_kind", "agent_id", "playbook_version"}) {
        for (auto p = packet.find(token); p != std::string::npos; p = packet.find(token, p + 1)) ++leaks;
    }
    const auto key = key_from_json(parse_json_file(out / "key.json"));
    const auto oracle = key_from_json(parse_json_file(vc_test::source_path("fixtures/eval/v1/key.json")));
    bool same = key.size() == oracle.size();
    for (const auto& [label, e] : oracle) {
        const auto it = key.find(label);
        same = same && it != key.end() && it->second.trial_id == e.trial_id;
    }
    std::size_t bad_sizes = 0;
    for (std::size_t n = 2; n <= 100; ++n) {
        const auto perm = blind_permutation(n, 42);
        const std::set<std::size_t> seen(perm.begin(), perm.end());
        if (perm.size() != n || seen.size() != n || *seen.rbegin() != n - 1) ++bad_sizes;
    }
    std::ostringstream d;
    d << "identity tokens in packet=" << leaks << ", seed-42 order " << (same ? "matches" : "differs from")
      << " oracle, non-bijective sizes=" << bad_sizes;
    return {leaks == 0 && same && bad_sizes == 0, d.str()};
}

Verdict trial_determinism() {
    const fs::path dir = vc_test::scratch_dir("acceptance_trial");
    std::string outputs[2];
    for (int i = 0; i < 2; ++i) {
        const fs::path out = dir / ("run" + std::to_string(i) + ".json");
        const Command c = cli("trial --scenario happy_path --adapter scripted --out " + quote(out.string()));
        if (c.status != 0) return {false, "trial exited " + std::to_string(c.status) + ": " + c.out};
        outputs[i] = read_text_file(out);
    }
    const TrialRecording rec = recording_from_json(Json::parse(outputs[0]));
    const auto script = script_interleaving(load_scenario(vc_test::source_path("data/scenarios/happy_path.json")));
    bool matches = rec.transcript.size() == script.size();
    for (std::size_t i = 0; matches && i < script.size(); ++i) {
        matches = rec.transcript[i].text == script[i].text &&
                  (rec.transcript[i].speaker == Speaker::agent) == script[i].agent;
    }
    std::ostringstream d;
    d << "runs " << (outputs[0] == outputs[1] ? "identical" : "differ") << ", " << rec.transcript.size()
      << " turns " << (matches ? "equal" : "differ from") << " the script interleaving";
    return {outputs[0] == outputs[1] && matches && rec.valid, d.str()};
}

Verdict barge_in_bound() {
    GatewayConfig g = vc_test::test_gateway_config();
    g.processing_delay_ms = 0;
    vc_test::LocalGateway gw(g);
    std::size_t ok = 0;
    std::size_t worst = 0;
    std::string first_error;
    for (std::size_t i = 0; i < kBargeInRuns; ++i) {
        vc_test::BargeInRun run;
        try {
            run = vc_test::run_barge_in(gw.port());
        } catch (const std::exception& e) {
            run.error = e.what();
        }
        worst = std::max(worst, run.audio_before_cancel);
        if (run.error.empty() && run.cancel_seen && run.audio_before_cancel <= kBargeInMaxFrames &&
            run.audio_after_cancel == 0) {
            ++ok;
        } else if (first_error.empty()) {
            first_error = run.error.empty() ? "bound exceeded" : run.error;
        }
    }
    std::ostringstream d;
    d << ok << "/" << kBargeInRuns << " runs within bound, max frames before cancel=" << worst
      << " (pacing " << g.pacing_ms << " ms)";
    if (!first_error.empty()) d << ", first failure: " << first_error;
    return {ok == kBargeInRuns, d.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"echo_fidelity", echo_fidelity},
        {"clone_determinism", clone_determinism},
        {"lint_seeded_defects", lint_defects},
        {"rubric_integrity", rubric_integrity},
        {"aggregation_oracle", aggregation_oracle},
        {"blinding", blinding},
        {"scripted_trial_determinism", trial_determinism},
        {"barge_in_bound", barge_in_bound},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Verdict o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
