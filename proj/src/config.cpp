#include "voiceclone/config.hpp"

#include <set>

#include "voiceclone/error.hpp"
#include "voiceclone/toml.hpp"

namespace voiceclone {

namespace {

class Reader {
public:
    Reader(const TomlDocument& doc, std::string_view name) : doc_(doc), name_(name) {}

    [[noreturn]] void fail(const std::string& key, const std::string& message) const {
        int line = doc_.line_of(key);
        if (line == 0) {
            const auto dot = key.rfind('.');
            if (dot != std::string::npos) line = doc_.line_of(key.substr(0, dot));
        }
        throw ValidationError(name_ + ":" + std::to_string(line) + ": " + key + ": " + message);
    }

    void reject_unknown(const Json& table, const std::string& prefix, const std::set<std::string>& known) const {
        for (const auto& [key, _] : table.items()) {
            if (!known.contains(key)) fail(prefix + key, "unknown key");
        }
    }

    const Json* find(const Json& table, const std::string& key) const {
        auto it = table.find(key);
        return it == table.end() ? nullptr : &*it;
    }

    void string(const Json& table, const std::string& prefix, const std::string& key, std::string& out) const {
        if (const Json* v = find(table, key)) {
            if (!v->is_string()) fail(prefix + key, "expected a string");
            out = v->get<std::string>();
        }
    }

    void path(const Json& table, const std::string& prefix, const std::string& key, std::filesystem::path& out) const {
        std::string s = out.string();
        string(table, prefix, key, s);
        if (s.empty()) fail(prefix + key, "expected a non-empty path");
        out = s;
    }

    std::int64_t integer(const Json& table, const std::string& prefix, const std::string& key, std::int64_t current,
                         std::int64_t lo, std::int64_t hi) const {
        const Json* v = find(table, key);
        if (!v) return current;
        if (!v->is_number_integer()) fail(prefix + key, "expected an integer");
        const auto x = v->get<std::int64_t>();
        if (x < lo || x > hi) {
            fail(prefix + key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        return x;
    }

    double real(const Json& table, const std::string& prefix, const std::string& key, double current, double lo,
                double hi) const {
        const Json* v = find(table, key);
        if (!v) return current;
        if (!v->is_number()) fail(prefix + key, "expected a number");
        const double x = v->get<double>();
        if (!(x >= lo && x <= hi)) fail(prefix + key, "out of range");
        return x;
    }

    void strings(const Json& table, const std::string& prefix, const std::string& key,
                 std::vector<std::string>& out, bool non_empty) const {
        const Json* v = find(table, key);
        if (!v) return;
        if (!v->is_array()) fail(prefix + key, "expected an array of strings");
        std::vector<std::string> items;
        for (const auto& e : *v) {
            if (!e.is_string()) fail(prefix + key, "expected an array of strings");
            items.push_back(e.get<std::string>());
        }
        if (non_empty && items.empty()) fail(prefix + key, "must not be empty");
        out = std::move(items);
    }

    const Json& table(const Json& root, const std::string& key) const {
        static const Json empty = Json::object();
        const Json* v = find(root, key);
        if (!v) return empty;
        if (!v->is_object()) fail(key, "expected a table");
        return *v;
    }

private:
    const TomlDocument& doc_;
    std::string name_;
};

}  // namespace

AppConfig parse_config(std::string_view toml, std::string_view name) {
    const TomlDocument doc = parse_toml(toml, name);
    const Reader r(doc, name);
    const Json& root = doc.root;
    AppConfig cfg;

    r.reject_unknown(root, "",
                     {"corpus", "output_dir", "rubric", "sample_n", "exemplar_k", "topic_call_cap", "tier_threshold",
                      "weights", "topics", "adapter", "seed", "playbook", "gateway", "evaluation"});
    r.path(root, "", "corpus", cfg.corpus);
    r.path(root, "", "output_dir", cfg.output_dir);
    r.path(root, "", "rubric", cfg.evaluation.rubric);

    CloneConfig& c = cfg.clone;
    c.sample_n = static_cast<std::size_t>(r.integer(root, "", "sample_n", c.sample_n, 1, 10'000'000));
    c.exemplar_k = static_cast<std::size_t>(r.integer(root, "", "exemplar_k", c.exemplar_k, 1, 100'000));
    c.topic_call_cap = static_cast<std::size_t>(r.integer(root, "", "topic_call_cap", c.topic_call_cap, 1, 100'000));
    c.tier_threshold = r.real(root, "", "tier_threshold", c.tier_threshold, 0.0, 1.0);
    c.seed = static_cast<std::uint64_t>(r.integer(root, "", "seed", static_cast<std::int64_t>(c.seed), 0,
                                                  std::numeric_limits<std::int64_t>::max()));
    r.strings(root, "", "topics", c.topics, true);
    r.string(root, "", "adapter", c.adapter);
    if (c.adapter != "mock" && c.adapter != "external") r.fail("adapter", "expected \"mock\" or \"external\"");
    if (root.contains("weights")) {
        const Json& w = r.table(root, "weights");
        r.reject_unknown(w, "weights.", {"conversion", "duration"});
        c.weights.conversion = r.real(w, "weights.", "conversion", c.weights.conversion, 0.0, 1.0);
        c.weights.duration = r.real(w, "weights.", "duration", c.weights.duration, 0.0, 1.0);
    }

    const Json& pb = r.table(root, "playbook");
    r.reject_unknown(pb, "playbook.",
                     {"agent_name", "company", "product", "primary_goal", "closing_phrase", "removal_rule",
                      "compliance", "persona", "terminology", "goal_verbs", "redundancy_threshold",
                      "politeness_ratio"});
    PlaybookSettings& ps = c.playbook;
    r.string(pb, "playbook.", "agent_name", ps.agent_name);
    r.string(pb, "playbook.", "company", ps.company);
    r.string(pb, "playbook.", "product", ps.product);
    r.string(pb, "playbook.", "primary_goal", ps.primary_goal);
    r.string(pb, "playbook.", "closing_phrase", c.compliance.closing_phrase);
    r.string(pb, "playbook.", "removal_rule", c.compliance.removal_rule);
    r.strings(pb, "playbook.", "compliance", c.compliance.rules, false);
    r.strings(pb, "playbook.", "persona", ps.persona, false);
    r.strings(pb, "playbook.", "goal_verbs", ps.lint.goal_verbs, true);
    ps.lint.redundancy_threshold =
        r.real(pb, "playbook.", "redundancy_threshold", ps.lint.redundancy_threshold, 0.0, 1.0);
    ps.lint.politeness_ratio = r.real(pb, "playbook.", "politeness_ratio", ps.lint.politeness_ratio, 0.0, 1e6);
    if (pb.contains("terminology")) {
        const Json& t = r.table(pb, "terminology");
        ps.terminology.clear();
        for (const auto& [jargon, replacement] : t.items()) {
            if (!replacement.is_string()) r.fail("playbook.terminology." + jargon, "expected a string");
            ps.terminology.push_back({jargon, replacement.get<std::string>()});
        }
    }

    const Json& gw = r.table(root, "gateway");
    r.reject_unknown(gw, "gateway.",
                     {"bind", "port", "playbook_dir", "scenario_dir", "queue_capacity", "pacing_ms",
                      "processing_delay_ms", "threads", "slots"});
    GatewayConfig& g = cfg.gateway;
    r.string(gw, "gateway.", "bind", g.bind);
    g.port = static_cast<std::uint16_t>(r.integer(gw, "gateway.", "port", g.port, 0, 65535));
    r.path(gw, "gateway.", "playbook_dir", g.playbook_dir);
    r.path(gw, "gateway.", "scenario_dir", g.scenario_dir);
    g.queue_capacity = static_cast<std::size_t>(r.integer(gw, "gateway.", "queue_capacity",
                                                          static_cast<std::int64_t>(g.queue_capacity), 1, 100'000));
    g.pacing_ms = static_cast<int>(r.integer(gw, "gateway.", "pacing_ms", g.pacing_ms, 0, 1000));
    g.processing_delay_ms =
        static_cast<int>(r.integer(gw, "gateway.", "processing_delay_ms", g.processing_delay_ms, 0, 60'000));
    g.threads = static_cast<int>(r.integer(gw, "gateway.", "threads", g.threads, 1, 256));
    if (gw.contains("slots")) {
        const Json& s = r.table(gw, "slots");
        for (const auto& [slot, value] : s.items()) {
            if (!value.is_string()) r.fail("gateway.slots." + slot, "expected a string");
            g.slot_values[slot] = value.get<std::string>();
        }
    }

    const Json& ev = r.table(root, "evaluation");
    r.reject_unknown(ev, "evaluation.", {"flag_threshold", "blind_seed"});
    cfg.evaluation.flag_threshold = r.real(ev, "evaluation.", "flag_threshold", cfg.evaluation.flag_threshold, 0.0, 4.0);
    cfg.evaluation.blind_seed = static_cast<std::uint64_t>(r.integer(
        ev, "evaluation.", "blind_seed", static_cast<std::int64_t>(cfg.evaluation.blind_seed), 0,
        std::numeric_limits<std::int64_t>::max()));
    return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_text_file(path), path.string());
}

}  // namespace voiceclone
