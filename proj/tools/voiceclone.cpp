#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/signal_set.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "voiceclone/cloning.hpp"
#include "voiceclone/config.hpp"
#include "voiceclone/error.hpp"
#include "voiceclone/evaluation.hpp"
#include "voiceclone/gateway.hpp"
#include "voiceclone/io.hpp"
#include "voiceclone/playbook.hpp"
#include "voiceclone/text_model.hpp"

namespace fs = std::filesystem;
using namespace voiceclone;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;

struct Common {
    std::string config;
    std::string out;
};

void add_common(CLI::App* app, Common& c, const std::string& out_help) {
    app->add_option("--config", c.config, "TOML config file (default: $VC_CONFIG, else built-in defaults)");
    app->add_option("--out", c.out, out_help);
}

AppConfig load_app_config(const Common& c) {
    std::string path = c.config;
    if (path.empty()) {
        if (const char* env = std::getenv("VC_CONFIG"); env && *env) path = env;
    }
    if (path.empty()) return AppConfig{};
    spdlog::debug("config: {}", path);
    return load_config(path);
}

// Writes to --out when given, otherwise stdout.
void emit(const Common& c, const std::string& text) {
    if (c.out.empty()) {
        std::cout << text;
    } else {
        write_text_file(c.out, text);
        spdlog::info("wrote {}", c.out);
    }
}

std::string pretty(const Json& j) { return j.dump(2) + "\n"; }

// ---- corpus ----------------------------------------------------------------

int corpus_stats_cmd(const Common& c, const std::string& path) {
    load_app_config(c);
    const Corpus corpus = load_corpus(path);
    for (const auto& d : corpus.diagnostics) spdlog::warn("{}:{}: {}", path, d.line, d.message);
    emit(c, pretty(to_json(corpus_stats(corpus))));
    return kOk;
}

int corpus_validate_cmd(const Common& c, const std::string& path) {
    load_app_config(c);
    const Corpus corpus = load_corpus(path);
    std::string text;
    for (const auto& d : corpus.diagnostics) text += path + ":" + std::to_string(d.line) + ": " + d.message + "\n";
    emit(c, text);
    std::cerr << corpus.records.size() << " valid records, " << corpus.diagnostics.size() << " violations\n";
    return corpus.diagnostics.empty() ? kOk : kInvalid;
}

// ---- clone / lint / render -------------------------------------------------

struct CloneArgs {
    std::string corpus;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> sample_n;
    std::optional<std::size_t> exemplar_k;
    std::string adapter;
    std::string finetune_out;
};

int clone_cmd(const Common& c, const CloneArgs& a) {
    AppConfig cfg = load_app_config(c);
    if (!a.corpus.empty()) cfg.corpus = a.corpus;
    if (a.seed) cfg.clone.seed = *a.seed;
    if (a.sample_n) cfg.clone.sample_n = *a.sample_n;
    if (a.exemplar_k) cfg.clone.exemplar_k = *a.exemplar_k;
    if (!a.adapter.empty()) cfg.clone.adapter = a.adapter;

    const Corpus corpus = load_corpus(cfg.corpus);
    for (const auto& d : corpus.diagnostics) spdlog::warn("{}:{}: {}", cfg.corpus.string(), d.line, d.message);
    auto model = make_text_model(cfg.clone.adapter, cfg.clone.seed);
    const CloneResult result = run_clone(corpus, cfg.clone, *model);

    const fs::path out = c.out.empty() ? cfg.output_dir / "playbook.json" : fs::path(c.out);
    write_text_file(out, playbook_to_canonical_json(result.playbook));
    spdlog::info("wrote {} ({} calls sampled, {} exemplars)", out.string(), result.sampled_call_ids.size(),
                 result.exemplar_call_ids.size());
    if (!a.finetune_out.empty()) {
        write_text_file(a.finetune_out, finetune_jsonl(export_finetune_dataset(result.manual)));
        spdlog::info("wrote {}", a.finetune_out);
    }
    return kOk;
}

int lint_cmd(const Common& c, const std::string& path) {
    const AppConfig cfg = load_app_config(c);
    const AgentPlaybook pb = load_playbook(path);
    const auto diags = lint_playbook(pb, cfg.clone.playbook.lint);
    std::string text;
    for (const auto& d : diags) {
        text += std::string(to_string(d.code)) + "\t" + d.location + "\t" + d.message + "\n";
    }
    emit(c, text);
    return has_errors(diags) ? kInvalid : kOk;
}

int render_cmd(const Common& c, const std::string& path, const std::vector<std::string>& slots) {
    const AppConfig cfg = load_app_config(c);
    SlotValues values = cfg.gateway.slot_values;
    for (const auto& s : slots) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ValidationError("--slot expects name=value, got '" + s + "'");
        values[s.substr(0, eq)] = s.substr(eq + 1);
    }
    emit(c, render_system_prompt(load_playbook(path), values));
    return kOk;
}

// ---- serve -----------------------------------------------------------------

struct ServeArgs {
    std::string bind;
    std::optional<std::uint16_t> port;
    std::string playbook_dir;
    std::string scenario_dir;
    std::optional<int> pacing_ms;
    std::optional<int> processing_delay_ms;
    std::optional<int> threads;
};

int serve_cmd(const Common& c, const ServeArgs& a) {
    AppConfig cfg = load_app_config(c);
    GatewayConfig& g = cfg.gateway;
    if (!a.bind.empty()) g.bind = a.bind;
    if (a.port) g.port = *a.port;
    if (!a.playbook_dir.empty()) g.playbook_dir = a.playbook_dir;
    if (!a.scenario_dir.empty()) g.scenario_dir = a.scenario_dir;
    if (a.pacing_ms) g.pacing_ms = *a.pacing_ms;
    if (a.processing_delay_ms) g.processing_delay_ms = *a.processing_delay_ms;
    if (a.threads) g.threads = *a.threads;

    GatewayServer server(std::make_shared<GatewayCore>(g));
    server.start();
    if (!c.out.empty()) write_text_file(c.out, std::to_string(server.port()) + "\n");

    boost::asio::io_context signals_io;
    boost::asio::signal_set signals(signals_io, SIGINT, SIGTERM);
    signals.async_wait([&](const boost::system::error_code&, int sig) {
        spdlog::info("signal {}, shutting down", sig);
        server.stop();
    });
    std::thread signal_thread([&] { signals_io.run(); });
    server.wait();
    signals_io.stop();
    signal_thread.join();
    spdlog::info("served {} sessions", server.completed_sessions());
    return kOk;
}

// ---- trial -----------------------------------------------------------------

struct TrialArgs {
    std::string scenario;
    std::string adapter = "scripted";
    std::string gateway;
    std::string playbook;
    std::string playbook_id = "golden";
    std::string trial_id;
    std::string agent_kind = "ai";
    std::string agent_id;
    std::string agent_name;
    std::string playbook_version;
    std::string metrics_out;
};

int trial_cmd(const Common& c, const TrialArgs& a) {
    AppConfig cfg = load_app_config(c);
    const auto kind = parse_agent_kind(a.agent_kind);
    if (!kind) throw ValidationError("--agent-kind must be human or ai");
    const ScenarioScript script = load_scenario(cfg.gateway.scenario_dir / (a.scenario + ".json"));

    TrialOptions opt;
    opt.adapter = a.adapter;
    opt.scenario = a.scenario;
    opt.trial_id = a.trial_id.empty() ? "trial-" + a.scenario + "-" + a.agent_kind : a.trial_id;
    opt.playbook_id = a.playbook_id;
    if (!a.playbook_version.empty()) opt.playbook_version = a.playbook_version;
    if (!a.agent_id.empty()) opt.agent_id = a.agent_id;
    if (!a.agent_name.empty()) opt.agent_name = a.agent_name;

    std::unique_ptr<GatewayServer> local;
    if (a.gateway.empty()) {
        GatewayConfig g = cfg.gateway;
        g.port = 0;
        g.pacing_ms = 0;
        g.processing_delay_ms = 0;
        g.threads = 1;
        auto core = std::make_shared<GatewayCore>(g);
        if (!a.playbook.empty()) {
            opt.playbook_id = fs::path(a.playbook).stem().string();
            core->playbooks().add(opt.playbook_id, load_playbook(a.playbook));
        }
        local = std::make_unique<GatewayServer>(core);
        local->start();
        opt.port = local->port();
    } else {
        const auto colon = a.gateway.rfind(':');
        if (colon == std::string::npos) throw ValidationError("--gateway expects host:port");
        opt.host = a.gateway.substr(0, colon);
        try {
            const int port = std::stoi(a.gateway.substr(colon + 1));
            if (port <= 0 || port > 65535) throw std::out_of_range("port");
            opt.port = static_cast<std::uint16_t>(port);
        } catch (const std::exception&) {
            throw ValidationError("--gateway expects host:port");
        }
    }

    TrialRecording rec = run_scripted_trial(opt, script);
    rec.agent_kind = *kind;
    if (local) local->stop();
    // Session metrics carry wall-clock timings; keep them out of the recording.
    if (!a.metrics_out.empty()) write_text_file(a.metrics_out, pretty(rec.metrics));
    rec.metrics = nullptr;
    emit(c, pretty(to_json(rec)));
    if (!rec.valid) {
        spdlog::error("trial {} failed: {}", rec.trial_id, rec.error);
        return 2;
    }
    return kOk;
}

// ---- blind / aggregate / report --------------------------------------------

std::vector<TrialRecording> load_recordings(const std::vector<std::string>& inputs) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            for (const auto& e : fs::directory_iterator(in)) {
                if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
            }
        } else {
            files.emplace_back(in);
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<TrialRecording> out;
    for (const auto& f : files) out.push_back(load_recording(f));
    return out;
}

int blind_cmd(const Common& c, std::optional<std::uint64_t> seed, const std::vector<std::string>& inputs) {
    const AppConfig cfg = load_app_config(c);
    const BlindPacket packet = build_blind_packet(load_recordings(inputs), seed.value_or(cfg.evaluation.blind_seed));
    const fs::path dir = c.out.empty() ? cfg.output_dir / "blind" : fs::path(c.out);
    write_text_file(dir / "packet.json", pretty(packet_to_json(packet)));
    write_private_file(dir / "key.json", pretty(key_to_json(packet)));
    spdlog::info("wrote {} items to {}/packet.json, key to {}/key.json", packet.items.size(), dir.string(),
                 dir.string());
    return kOk;
}

struct AggregateArgs {
    std::string key;
    std::vector<std::string> scores;
    std::string rubric;
    bool skip_invalid = false;
};

int aggregate_cmd(const Common& c, const AggregateArgs& a) {
    const AppConfig cfg = load_app_config(c);
    const Rubric rubric = load_rubric(a.rubric.empty() ? cfg.evaluation.rubric : fs::path(a.rubric));
    const auto key = key_from_json(parse_json_file(a.key));
    std::vector<std::string> labels;
    for (const auto& [label, _] : key) labels.push_back(label);

    std::vector<ScoreSheet> sheets;
    for (const auto& path : a.scores) {
        for (auto& s : parse_score_csv(read_text_file(path))) sheets.push_back(std::move(s));
    }
    const IngestResult ingest = ingest_score_sheets(labels, sheets, rubric);
    for (const auto& r : ingest.rejected) {
        spdlog::error("rejected sheet {}/{}: {}", r.evaluator_id, r.label, r.reason);
    }
    if (!ingest.rejected.empty() && !a.skip_invalid) {
        std::cerr << ingest.rejected.size() << " sheet(s) rejected; fix them or pass --skip-invalid\n";
        return kInvalid;
    }

    const AggregateOutput result = aggregate_scores(ingest.accepted, key, rubric);
    const fs::path dir = c.out.empty() ? cfg.output_dir / "report" : fs::path(c.out);
    write_text_file(dir / "report.json", pretty(to_json(result.report)));
    write_text_file(dir / "report.csv", report_csv(result.report));
    Json ek = Json::object();
    for (const auto& [pseudonym, raw] : result.evaluator_key) ek[pseudonym] = raw;
    write_private_file(dir / "evaluator_key.json", pretty(ek));
    spdlog::info("aggregated {} sheets into {}", ingest.accepted.size(), dir.string());
    return kOk;
}

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.*f", digits, x);
    return buf;
}

int report_cmd(const Common& c, const std::vector<std::string>& compare, std::optional<double> threshold,
               const std::string& format, const std::string& single) {
    const AppConfig cfg = load_app_config(c);
    if (compare.empty()) {
        if (single.empty()) throw ValidationError("report needs a report.json or --compare v1 v2");
        const AggregateReport r = report_from_json(parse_json_file(single));
        emit(c, format == "csv" ? report_csv(r) : pretty(to_json(r)));
        return kOk;
    }
    const AggregateReport v1 = report_from_json(parse_json_file(compare[0]));
    const AggregateReport v2 = report_from_json(parse_json_file(compare[1]));
    const Comparison cmp = compare_reports(v1, v2, threshold.value_or(cfg.evaluation.flag_threshold));
    if (format == "text") {
        std::string text;
        for (const auto& row : cmp.changes) {
            text += row.scenario_id + "\t" + std::string(to_string(row.agent_kind)) + "\t" + row.category + "\t" +
                    fixed(row.pct_change, 1) + "%" + (row.flagged ? "\tflagged" : "") + "\n";
        }
        emit(c, text);
    } else {
        emit(c, pretty(to_json(cmp)));
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("voiceclone");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S.%e] [%l] %v");

    CLI::App app{"voiceclone: clone a sales agent into a playbook, serve it as a voice agent, evaluate it blind"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);
    app.fallthrough();
    bool verbose = false;
    bool quiet = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");
    app.add_flag("-q,--quiet", quiet, "Errors only");

    Common common;

    auto* corpus = app.add_subcommand("corpus", "Inspect a call corpus");
    corpus->require_subcommand(1);
    std::string corpus_path;
    auto* stats = corpus->add_subcommand("stats", "Print corpus statistics as JSON");
    stats->add_option("path", corpus_path, "Corpus JSONL file")->required();
    add_common(stats, common, "Write the statistics here instead of stdout");
    auto* validate = corpus->add_subcommand("validate", "List rejected lines; exit 1 if there are any");
    validate->add_option("path", corpus_path, "Corpus JSONL file")->required();
    add_common(validate, common, "Write the violations here instead of stdout");

    CloneArgs clone_args;
    auto* clone = app.add_subcommand("clone", "Run the cloning pipeline and write playbook.json");
    add_common(clone, common, "Playbook output path (default: <output_dir>/playbook.json)");
    clone->add_option("--corpus", clone_args.corpus, "Corpus JSONL file");
    clone->add_option("--seed", clone_args.seed, "Sampling and extraction seed");
    clone->add_option("--sample-n", clone_args.sample_n, "Calls to sample")->check(CLI::PositiveNumber);
    clone->add_option("--exemplar-k", clone_args.exemplar_k, "Exemplar calls")->check(CLI::PositiveNumber);
    clone->add_option("--adapter", clone_args.adapter, "Text model backend")->check(CLI::IsMember({"mock", "external"}));
    clone->add_option("--finetune-out", clone_args.finetune_out, "Also write the fine-tune Q&A dataset (JSONL)");

    std::string playbook_path;
    auto* lint = app.add_subcommand("lint", "Check a playbook; exit 1 on error diagnostics");
    lint->add_option("playbook", playbook_path, "playbook.json")->required();
    add_common(lint, common, "Write diagnostics here instead of stdout");

    std::vector<std::string> slots;
    auto* render = app.add_subcommand("render", "Print the system prompt rendered from a playbook");
    render->add_option("playbook", playbook_path, "playbook.json")->required();
    render->add_option("--slot", slots, "Slot value as name=value (repeatable)");
    add_common(render, common, "Write the prompt here instead of stdout");

    ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "Run the realtime voice gateway");
    add_common(serve, common, "Write the bound port to this file once listening");
    serve->add_option("--bind", serve_args.bind, "Listen address");
    serve->add_option("--port", serve_args.port, "Listen port, 0 for any free port");
    serve->add_option("--playbook-dir", serve_args.playbook_dir, "Directory of <playbook_id>.json files");
    serve->add_option("--scenario-dir", serve_args.scenario_dir, "Directory of <scenario>.json scripts");
    serve->add_option("--pacing-ms", serve_args.pacing_ms, "Minimum spacing of outgoing audio frames");
    serve->add_option("--processing-delay-ms", serve_args.processing_delay_ms, "Echo adapter delay per turn");
    serve->add_option("--threads", serve_args.threads, "I/O threads")->check(CLI::PositiveNumber);

    TrialArgs trial_args;
    auto* trial = app.add_subcommand("trial", "Play a scripted customer against the agent and record the call");
    add_common(trial, common, "Recording output path (default: stdout)");
    trial->add_option("--scenario", trial_args.scenario, "Scenario id")->required();
    trial->add_option("--adapter", trial_args.adapter, "Speech adapter")->check(CLI::IsMember({"scripted", "external"}));
    trial->add_option("--gateway", trial_args.gateway, "host:port of a running gateway (default: in-process)");
    trial->add_option("--playbook", trial_args.playbook, "playbook.json to serve from the in-process gateway");
    trial->add_option("--playbook-id", trial_args.playbook_id, "Playbook id known to the gateway");
    trial->add_option("--trial-id", trial_args.trial_id, "Recording id (default: trial-<scenario>-<kind>)");
    trial->add_option("--agent-kind", trial_args.agent_kind, "human or ai")->check(CLI::IsMember({"human", "ai"}));
    trial->add_option("--agent-id", trial_args.agent_id, "Agent id, kept out of blind packets");
    trial->add_option("--agent-name", trial_args.agent_name, "Agent name, redacted in blind packets");
    trial->add_option("--playbook-version", trial_args.playbook_version, "Playbook version label, e.g. v1");
    trial->add_option("--metrics-out", trial_args.metrics_out, "Write the session metrics here");

    std::optional<std::uint64_t> blind_seed;
    std::vector<std::string> recordings;
    auto* blind = app.add_subcommand("blind", "Build a blinded evaluation packet and its sealed key");
    add_common(blind, common, "Output directory for packet.json and key.json (default: <output_dir>/blind)");
    blind->add_option("--seed", blind_seed, "Shuffle seed");
    blind->add_option("recordings", recordings, "Recording files or directories")->required();

    AggregateArgs agg_args;
    auto* aggregate = app.add_subcommand("aggregate", "Unblind score sheets and aggregate them");
    add_common(aggregate, common, "Output directory for report.json, report.csv, evaluator_key.json");
    aggregate->add_option("--key", agg_args.key, "Sealed key.json")->required();
    aggregate->add_option("--scores", agg_args.scores, "Score sheet CSV (repeatable)")->required();
    aggregate->add_option("--rubric", agg_args.rubric, "rubric.json (default from config)");
    aggregate->add_flag("--skip-invalid", agg_args.skip_invalid, "Drop rejected sheets instead of failing");

    std::vector<std::string> compare;
    std::optional<double> threshold;
    std::string format = "json";
    std::string report_path;
    auto* report = app.add_subcommand("report", "Print a report, or compare two versions");
    add_common(report, common, "Write the output here instead of stdout");
    report->add_option("report", report_path, "report.json to print");
    report->add_option("--compare", compare, "Two report.json files: v1 v2")->expected(2);
    report->add_option("--threshold", threshold, "Flag deltas whose magnitude exceeds this");
    report->add_option("--format", format, "json, text or csv")->check(CLI::IsMember({"json", "text", "csv"}));

    if (argc > 1 && argv[1][0] != '-') {
        const std::string name = argv[1];
        const auto subs = app.get_subcommands([&](CLI::App* sub) { return sub->check_name(name); });
        if (subs.empty()) {
            std::cerr << "unknown subcommand '" << name << "'\n" << app.help();
            return kInvalid;
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }
    spdlog::set_level(quiet ? spdlog::level::err : verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (stats->parsed()) return corpus_stats_cmd(common, corpus_path);
        if (validate->parsed()) return corpus_validate_cmd(common, corpus_path);
        if (clone->parsed()) return clone_cmd(common, clone_args);
        if (lint->parsed()) return lint_cmd(common, playbook_path);
        if (render->parsed()) return render_cmd(common, playbook_path, slots);
        if (serve->parsed()) return serve_cmd(common, serve_args);
        if (trial->parsed()) return trial_cmd(common, trial_args);
        if (blind->parsed()) return blind_cmd(common, blind_seed, recordings);
        if (aggregate->parsed()) return aggregate_cmd(common, agg_args);
        if (report->parsed()) return report_cmd(common, compare, threshold, format, report_path);
    } catch (const ValidationError& e) {
        spdlog::error("{}", e.what());
        return kInvalid;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return kInvalid;
}
