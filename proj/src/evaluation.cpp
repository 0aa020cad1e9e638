#include "voiceclone/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "voiceclone/client.hpp"
#include "voiceclone/error.hpp"
#include "voiceclone/rng.hpp"
#include "voiceclone/text.hpp"

namespace voiceclone {

// ---- rubric ---------------------------------------------------------------------

std::size_t Rubric::criterion_count() const {
    std::size_t n = 0;
    for (const auto& c : categories) n += c.criteria.size();
    return n;
}

std::vector<int> Rubric::criterion_ids() const {
    std::vector<int> ids;
    for (const auto& c : categories) {
        for (const auto& k : c.criteria) ids.push_back(k.id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

int Rubric::category_index(int criterion_id) const {
    for (std::size_t i = 0; i < categories.size(); ++i) {
        for (const auto& k : categories[i].criteria) {
            if (k.id == criterion_id) return static_cast<int>(i);
        }
    }
    return -1;
}

std::string Rubric::signature() const {
    std::string sig;
    for (const auto& c : categories) {
        sig += c.name + ":";
        for (std::size_t i = 0; i < c.criteria.size(); ++i) {
            sig += (i ? "," : "") + std::to_string(c.criteria[i].id);
        }
        sig += "|";
    }
    return sig + "scale " + std::to_string(scale_min) + "-" + std::to_string(scale_max);
}

Rubric rubric_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("rubric: expected an object");
    Rubric r;
    r.scale_min = j.value("scale_min", 0);
    r.scale_max = j.value("scale_max", 0);
    if (r.scale_min != 1 || r.scale_max != 5) {
        throw ValidationError("rubric: scale must be 1-5, got " + std::to_string(r.scale_min) + "-" +
                              std::to_string(r.scale_max));
    }
    r.canonical = j.value("canonical", false);
    r.note = j.value("note", "");
    if (!j.contains("categories") || !j.at("categories").is_array()) {
        throw ValidationError("rubric: categories must be an array");
    }
    const Json& cats = j.at("categories");
    if (cats.size() != kRubricCategories.size()) {
        throw ValidationError("rubric: expected " + std::to_string(kRubricCategories.size()) + " categories, got " +
                              std::to_string(cats.size()));
    }
    std::set<int> seen;
    for (std::size_t i = 0; i < cats.size(); ++i) {
        const Json& c = cats[i];
        RubricCategory cat;
        cat.name = c.value("name", "");
        if (cat.name != kRubricCategories[i]) {
            throw ValidationError("rubric: category " + std::to_string(i + 1) + " must be '" +
                                  std::string(kRubricCategories[i]) + "', got '" + cat.name + "'");
        }
        cat.description = c.value("description", "");
        if (!c.contains("criteria") || !c.at("criteria").is_array() || c.at("criteria").empty()) {
            throw ValidationError("rubric: category '" + cat.name + "' has no criteria");
        }
        for (const auto& k : c.at("criteria")) {
            if (!k.is_object() || !k.contains("id") || !k.at("id").is_number_integer()) {
                throw ValidationError("rubric: criterion in '" + cat.name + "' needs an integer id");
            }
            Criterion crit{k.at("id").get<int>(), k.value("text", "")};
            if (text::trim(crit.text).empty()) {
                throw ValidationError("rubric: criterion " + std::to_string(crit.id) + " has no text");
            }
            if (!seen.insert(crit.id).second) {
                throw ValidationError("rubric: duplicate criterion id " + std::to_string(crit.id));
            }
            cat.criteria.push_back(std::move(crit));
        }
        r.categories.push_back(std::move(cat));
    }
    if (r.criterion_count() != kRubricCriteria) {
        throw ValidationError("rubric: expected " + std::to_string(kRubricCriteria) + " criteria, got " +
                              std::to_string(r.criterion_count()));
    }
    return r;
}

Json to_json(const Rubric& r) {
    Json cats = Json::array();
    for (const auto& c : r.categories) {
        Json crit = Json::array();
        for (const auto& k : c.criteria) crit.push_back({{"id", k.id}, {"text", k.text}});
        cats.push_back({{"name", c.name}, {"description", c.description}, {"criteria", crit}});
    }
    return {{"scale_min", r.scale_min}, {"scale_max", r.scale_max}, {"canonical", r.canonical},
            {"note", r.note},           {"categories", cats}};
}

Rubric load_rubric(const std::filesystem::path& path) {
    try {
        return rubric_from_json(parse_json_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

// ---- recordings -------------------------------------------------------------------

std::string_view to_string(AgentKind k) { return k == AgentKind::human ? "human" : "ai"; }

std::optional<AgentKind> parse_agent_kind(std::string_view s) {
    if (s == "human") return AgentKind::human;
    if (s == "ai") return AgentKind::ai;
    return std::nullopt;
}

namespace {

void put_optional(Json& j, const char* key, const std::optional<std::string>& v) {
    if (v) j[key] = *v;
}

std::optional<std::string> get_optional(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_string()) throw ValidationError(std::string(key) + ": expected a string");
    return j.at(key).get<std::string>();
}

std::string get_string(const Json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) throw ValidationError(std::string(key) + ": expected a string");
    return j.at(key).get<std::string>();
}

}  // namespace

Json to_json(const TrialRecording& r) {
    Json turns = Json::array();
    for (const auto& t : r.transcript) turns.push_back(to_json(t));
    Json j = {{"trial_id", r.trial_id},
              {"scenario_id", r.scenario_id},
              {"agent_kind", to_string(r.agent_kind)},
              {"transcript", turns},
              {"valid", r.valid}};
    put_optional(j, "audio_path", r.audio_path);
    put_optional(j, "playbook_version", r.playbook_version);
    put_optional(j, "agent_id", r.agent_id);
    put_optional(j, "agent_name", r.agent_name);
    if (!r.valid) j["error"] = r.error;
    if (!r.metrics.is_null()) j["metrics"] = r.metrics;
    return j;
}

TrialRecording recording_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("recording: expected an object");
    TrialRecording r;
    r.trial_id = get_string(j, "trial_id");
    if (text::trim(r.trial_id).empty()) throw ValidationError("trial_id: empty");
    r.scenario_id = get_string(j, "scenario_id");
    const auto kind = parse_agent_kind(get_string(j, "agent_kind"));
    if (!kind) throw ValidationError("agent_kind: expected human or ai");
    r.agent_kind = *kind;
    if (!j.contains("transcript") || !j.at("transcript").is_array()) {
        throw ValidationError("transcript: expected an array");
    }
    for (std::size_t i = 0; i < j.at("transcript").size(); ++i) {
        r.transcript.push_back(turn_from_json(j.at("transcript")[i], "transcript[" + std::to_string(i) + "]"));
    }
    r.audio_path = get_optional(j, "audio_path");
    r.playbook_version = get_optional(j, "playbook_version");
    r.agent_id = get_optional(j, "agent_id");
    r.agent_name = get_optional(j, "agent_name");
    r.valid = j.value("valid", true);
    r.error = j.value("error", "");
    if (j.contains("metrics")) r.metrics = j.at("metrics");
    return r;
}

TrialRecording load_recording(const std::filesystem::path& path) {
    try {
        return recording_from_json(parse_json_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

// ---- trials -------------------------------------------------------------------------

TrialRecording run_scripted_trial(const TrialOptions& options, const ScenarioScript& script) {
    TrialRecording rec;
    rec.trial_id = options.trial_id.empty() ? script.scenario_id + "-" + options.adapter : options.trial_id;
    rec.scenario_id = script.scenario_id;
    rec.agent_kind = AgentKind::ai;
    rec.playbook_version = options.playbook_version;
    rec.agent_id = options.agent_id;
    rec.agent_name = options.agent_name;

    auto fail = [&rec](const std::string& cause) {
        if (rec.valid) {
            rec.valid = false;
            rec.error = cause;
        }
    };

    try {
        HeadlessClient client(options.host, options.port,
                              {{"playbook_id", options.playbook_id},
                               {"adapter", options.adapter},
                               {"scenario", options.scenario}});
        client.send_json({{"type", "session.start"}});

        std::int64_t cursor = 0;
        std::size_t next_customer = 0;
        std::string agent_text;
        std::int64_t agent_ms = 0;
        bool metrics_seen = false;

        auto speak = [&] {
            const CustomerTurn& turn = script.customer_turns[next_customer++];
            const Pcm pcm = customer_pcm(turn);
            client.send_audio(pcm);
            client.send_json({{"type", "audio.end"}});
            const std::int64_t dur = pcm_duration_ms(pcm.size());
            rec.transcript.push_back({Speaker::customer, turn.text, cursor, cursor + dur, Json::object()});
            cursor += dur;
        };
        auto end_agent_turn = [&]() -> bool {
            if (agent_text.empty() && agent_ms == 0) return false;
            rec.transcript.push_back({Speaker::agent, agent_text, cursor, cursor + agent_ms, Json::object()});
            cursor += agent_ms;
            agent_text.clear();
            agent_ms = 0;
            return true;
        };

        for (;;) {
            auto m = client.next(options.timeout);
            if (!m) {
                if (!client.closed()) fail("timed out waiting for the gateway");
                break;
            }
            if (m->binary) {
                agent_ms += pcm_duration_ms(m->frame.pcm.size());
                continue;
            }
            const std::string type = m->json.is_object() ? m->json.value("type", "") : "";
            if (type == "session.started") {
                if (!script.agent_opens()) speak();
            } else if (type == "agent.transcript.delta") {
                agent_text += m->json.value("text", "");
            } else if (type == "agent.turn.complete" || type == "playback.cancel") {
                if (!end_agent_turn()) continue;
                if (next_customer < script.customer_turns.size()) {
                    speak();
                } else {
                    client.send_json({{"type", "session.close"}});
                }
            } else if (type == "session.metrics") {
                metrics_seen = true;
                rec.metrics = m->json;
                rec.metrics.erase("type");
            } else if (type == "error") {
                fail(m->json.value("code", "error") + ": " + m->json.value("message", ""));
            }
        }
        if (!metrics_seen) fail("session ended without metrics");
        end_agent_turn();
    } catch (const Error& e) {
        fail(e.what());
    }
    return rec;
}

// ---- blinding -------------------------------------------------------------------------

std::string blind_label(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "R%02zu", index + 1);
    return buf;
}

std::vector<std::size_t> blind_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    return order;
}

std::vector<std::string> identity_tokens(const TrialRecording& r) {
    std::vector<std::string> tokens = {"human", "ai"};
    for (const auto& v : {r.agent_id, r.agent_name, r.playbook_version}) {
        if (v && !text::trim(*v).empty()) tokens.push_back(text::trim(*v));
    }
    return tokens;
}

namespace {

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string redact(std::string_view input, const std::vector<std::string>& tokens) {
    std::vector<std::string> sorted = tokens;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return a.size() != b.size() ? a.size() > b.size() : a < b;
    });
    std::string out(input);
    for (const auto& token : sorted) {
        if (token.empty()) continue;
        const std::string needle = text::to_lower(token);
        std::string lower = text::to_lower(out);
        std::size_t pos = 0;
        while ((pos = lower.find(needle, pos)) != std::string::npos) {
            const std::size_t end = pos + needle.size();
            const bool left = pos == 0 || !word_char(out[pos - 1]) || !word_char(out[pos]);
            const bool right = end == out.size() || !word_char(out[end]) || !word_char(out[end - 1]);
            if (left && right) {
                out.replace(pos, needle.size(), kRedacted);
                lower = text::to_lower(out);
                pos += kRedacted.size();
            } else {
                pos += 1;
            }
        }
    }
    return out;
}

BlindPacket build_blind_packet(const std::vector<TrialRecording>& recordings, std::uint64_t seed) {
    if (recordings.size() < 2) throw ValidationError("a blind packet needs at least two recordings");
    std::vector<const TrialRecording*> sorted;
    std::set<std::string> ids;
    for (const auto& r : recordings) {
        if (!ids.insert(r.trial_id).second) throw ValidationError("duplicate trial_id '" + r.trial_id + "'");
        if (!r.valid) throw ValidationError("recording '" + r.trial_id + "' is invalid: " + r.error);
        sorted.push_back(&r);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const TrialRecording* a, const TrialRecording* b) { return a->trial_id < b->trial_id; });

    std::vector<std::string> all_tokens;
    for (const auto* r : sorted) {
        for (auto& t : identity_tokens(*r)) all_tokens.push_back(std::move(t));
    }
    std::sort(all_tokens.begin(), all_tokens.end());
    all_tokens.erase(std::unique(all_tokens.begin(), all_tokens.end()), all_tokens.end());

    BlindPacket packet;
    packet.seed = seed;
    const auto order = blind_permutation(sorted.size(), seed);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const TrialRecording& r = *sorted[order[i]];
        BlindItem item;
        item.label = blind_label(i);
        item.scenario_id = r.scenario_id;
        for (const auto& t : r.transcript) {
            Turn copy{t.speaker, redact(t.text, all_tokens), t.start_ms, t.end_ms, Json::object()};
            item.transcript.push_back(std::move(copy));
        }
        packet.key[item.label] = {r.trial_id, r.scenario_id, r.agent_kind, r.playbook_version, r.agent_id};
        packet.items.push_back(std::move(item));
    }
    return packet;
}

Json packet_to_json(const BlindPacket& p) {
    Json items = Json::array();
    for (const auto& item : p.items) {
        Json turns = Json::array();
        for (const auto& t : item.transcript) turns.push_back(to_json(t));
        items.push_back({{"label", item.label}, {"scenario_id", item.scenario_id}, {"transcript", turns}});
    }
    return {{"seed", p.seed}, {"items", items}};
}

Json key_to_json(const BlindPacket& p) {
    Json labels = Json::object();
    for (const auto& [label, e] : p.key) {
        Json entry = {{"trial_id", e.trial_id}, {"scenario_id", e.scenario_id}, {"agent_kind", to_string(e.agent_kind)}};
        put_optional(entry, "playbook_version", e.playbook_version);
        put_optional(entry, "agent_id", e.agent_id);
        labels[label] = entry;
    }
    return {{"seed", p.seed}, {"labels", labels}};
}

std::map<std::string, BlindKeyEntry> key_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("labels") || !j.at("labels").is_object()) {
        throw ValidationError("sealed key: expected an object with 'labels'");
    }
    std::map<std::string, BlindKeyEntry> key;
    for (const auto& [label, e] : j.at("labels").items()) {
        try {
            BlindKeyEntry entry;
            entry.trial_id = get_string(e, "trial_id");
            entry.scenario_id = get_string(e, "scenario_id");
            const auto kind = parse_agent_kind(get_string(e, "agent_kind"));
            if (!kind) throw ValidationError("agent_kind: expected human or ai");
            entry.agent_kind = *kind;
            entry.playbook_version = get_optional(e, "playbook_version");
            entry.agent_id = get_optional(e, "agent_id");
            key[label] = std::move(entry);
        } catch (const ValidationError& err) {
            throw ValidationError("sealed key: label " + label + ": " + err.what());
        }
    }
    return key;
}

// ---- scoring ------------------------------------------------------------------------

namespace {

int parse_int_field(std::string_view field, const char* name, int line) {
    const std::string f = text::trim(field);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
    if (ec != std::errc() || ptr != f.data() + f.size() || f.empty()) {
        throw ValidationError("scores line " + std::to_string(line) + ": " + name + " '" + f + "' is not an integer");
    }
    return value;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::vector<ScoreSheet> parse_score_csv(std::string_view csv) {
    std::vector<ScoreSheet> sheets;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    int line_no = 0;
    bool header = false;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        auto nl = csv.find('\n', pos);
        std::string_view line = csv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? csv.size() + 1 : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (text::trim(line).empty()) continue;
        if (!header) {
            if (text::trim(line) != "evaluator_id,label,criterion_id,score") {
                throw ValidationError("scores line " + std::to_string(line_no) +
                                      ": expected header evaluator_id,label,criterion_id,score");
            }
            header = true;
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != 4) {
            throw ValidationError("scores line " + std::to_string(line_no) + ": expected 4 fields, got " +
                                  std::to_string(fields.size()));
        }
        const std::string evaluator = text::trim(fields[0]);
        const std::string label = text::trim(fields[1]);
        if (evaluator.empty() || label.empty()) {
            throw ValidationError("scores line " + std::to_string(line_no) + ": empty evaluator_id or label");
        }
        const int criterion = parse_int_field(fields[2], "criterion_id", line_no);
        const int score = parse_int_field(fields[3], "score", line_no);
        auto [it, inserted] = index.emplace(std::make_pair(evaluator, label), sheets.size());
        if (inserted) sheets.push_back({evaluator, label, {}});
        sheets[it->second].scores.emplace_back(criterion, score);
    }
    if (!header) throw ValidationError("scores: missing header");
    return sheets;
}

IngestResult ingest_score_sheets(const std::vector<std::string>& labels, const std::vector<ScoreSheet>& sheets,
                                 const Rubric& rubric) {
    const std::set<std::string> known(labels.begin(), labels.end());
    const auto ids = rubric.criterion_ids();
    IngestResult result;
    for (const auto& sheet : sheets) {
        std::string reason;
        if (!known.contains(sheet.label)) {
            reason = "unknown label '" + sheet.label + "'";
        }
        std::set<int> seen;
        for (const auto& [cid, score] : sheet.scores) {
            if (!reason.empty()) break;
            if (rubric.category_index(cid) < 0) {
                reason = "unknown criterion " + std::to_string(cid);
            } else if (!seen.insert(cid).second) {
                reason = "duplicate criterion " + std::to_string(cid);
            } else if (score < rubric.scale_min || score > rubric.scale_max) {
                reason = "criterion " + std::to_string(cid) + " score " + std::to_string(score) + " out of range " +
                         std::to_string(rubric.scale_min) + "-" + std::to_string(rubric.scale_max);
            }
        }
        if (reason.empty()) {
            for (int id : ids) {
                if (!seen.contains(id)) {
                    reason = "missing criterion " + std::to_string(id);
                    break;
                }
            }
        }
        if (reason.empty()) {
            result.accepted.push_back(sheet);
        } else {
            result.rejected.push_back({sheet.evaluator_id, sheet.label, reason});
        }
    }
    return result;
}

// ---- aggregation -----------------------------------------------------------------------

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

const CellReport* AggregateReport::cell(std::string_view scenario, AgentKind kind) const {
    for (const auto& c : cells) {
        if (c.scenario_id == scenario && c.agent_kind == kind) return &c;
    }
    return nullptr;
}

namespace {

struct SheetScores {
    std::map<int, int> by_criterion;
};

std::vector<std::string> ordered_scenarios(const std::set<std::string>& present) {
    std::vector<std::string> out;
    for (auto id : kScenarioIds) {
        if (present.contains(std::string(id))) out.emplace_back(id);
    }
    for (const auto& id : present) {
        if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    }
    return out;
}

}  // namespace

AggregateOutput aggregate_scores(const std::vector<ScoreSheet>& input, const std::map<std::string, BlindKeyEntry>& key,
                                 const Rubric& rubric) {
    if (input.empty()) throw ValidationError("no score sheets to aggregate");
    std::vector<ScoreSheet> sheets = input;
    std::sort(sheets.begin(), sheets.end(), [](const ScoreSheet& a, const ScoreSheet& b) {
        return std::tie(a.evaluator_id, a.label) < std::tie(b.evaluator_id, b.label);
    });

    AggregateOutput out;
    AggregateReport& report = out.report;
    report.rubric_signature = rubric.signature();

    std::set<std::string> raw_ids;
    for (const auto& s : sheets) raw_ids.insert(s.evaluator_id);
    std::size_t n = 0;
    for (const auto& id : raw_ids) {
        const std::string pseudonym = "E" + std::to_string(++n);
        report.evaluators.push_back(pseudonym);
        out.evaluator_key[pseudonym] = id;
    }

    // (scenario, kind) -> sheets
    std::map<std::pair<std::string, AgentKind>, std::vector<SheetScores>> cells;
    std::set<std::string> scenarios;
    for (const auto& s : sheets) {
        auto it = key.find(s.label);
        if (it == key.end()) throw ValidationError("label " + s.label + " is not in the sealed key");
        SheetScores scores;
        for (const auto& [cid, score] : s.scores) scores.by_criterion[cid] = score;
        cells[{it->second.scenario_id, it->second.agent_kind}].push_back(std::move(scores));
        scenarios.insert(it->second.scenario_id);
    }

    const auto criterion_ids = rubric.criterion_ids();
    auto sheet_category_mean = [&](const SheetScores& s, const RubricCategory& cat) {
        std::vector<double> xs;
        for (const auto& k : cat.criteria) xs.push_back(s.by_criterion.at(k.id));
        return mean_of(xs);
    };
    auto sheet_overall_mean = [&](const SheetScores& s) {
        std::vector<double> xs;
        for (int id : criterion_ids) xs.push_back(s.by_criterion.at(id));
        return mean_of(xs);
    };
    auto build_cell = [&](const std::string& scenario, AgentKind kind, const std::vector<SheetScores>& group) {
        CellReport cell;
        cell.scenario_id = scenario;
        cell.agent_kind = kind;
        cell.sheets = group.size();
        for (int id : criterion_ids) {
            std::vector<double> xs;
            for (const auto& s : group) xs.push_back(s.by_criterion.at(id));
            cell.criterion_means[id] = mean_of(xs);
        }
        std::vector<double> all_means;
        for (const auto& cat : rubric.categories) {
            std::vector<double> crit_means, per_sheet;
            for (const auto& k : cat.criteria) crit_means.push_back(cell.criterion_means[k.id]);
            for (const auto& s : group) per_sheet.push_back(sheet_category_mean(s, cat));
            cell.categories.push_back({cat.name, mean_of(crit_means), sample_std(per_sheet)});
        }
        for (int id : criterion_ids) all_means.push_back(cell.criterion_means[id]);
        cell.overall_mean = mean_of(all_means);
        std::vector<double> per_sheet;
        for (const auto& s : group) per_sheet.push_back(sheet_overall_mean(s));
        cell.overall_std = sample_std(per_sheet);
        return cell;
    };

    const auto scenario_order = ordered_scenarios(scenarios);
    for (const auto& scenario : scenario_order) {
        for (AgentKind kind : {AgentKind::human, AgentKind::ai}) {
            auto it = cells.find({scenario, kind});
            if (it == cells.end()) continue;
            report.cells.push_back(build_cell(scenario, kind, it->second));
        }
    }

    // Across-scenario rows: each scenario weighs the same.
    for (AgentKind kind : {AgentKind::human, AgentKind::ai}) {
        std::vector<const CellReport*> per_scenario;
        std::vector<SheetScores> pooled;
        for (const auto& scenario : scenario_order) {
            if (const CellReport* c = report.cell(scenario, kind)) {
                per_scenario.push_back(c);
                const auto& group = cells.at({scenario, kind});
                pooled.insert(pooled.end(), group.begin(), group.end());
            }
        }
        if (per_scenario.empty()) continue;
        CellReport all;
        all.scenario_id = "all";
        all.agent_kind = kind;
        all.sheets = pooled.size();
        for (int id : criterion_ids) {
            std::vector<double> xs;
            for (const auto* c : per_scenario) xs.push_back(c->criterion_means.at(id));
            all.criterion_means[id] = mean_of(xs);
        }
        for (std::size_t i = 0; i < rubric.categories.size(); ++i) {
            std::vector<double> means, per_sheet;
            for (const auto* c : per_scenario) means.push_back(c->categories[i].mean);
            for (const auto& s : pooled) per_sheet.push_back(sheet_category_mean(s, rubric.categories[i]));
            all.categories.push_back({rubric.categories[i].name, mean_of(means), sample_std(per_sheet)});
        }
        std::vector<double> overall, per_sheet;
        for (const auto* c : per_scenario) overall.push_back(c->overall_mean);
        for (const auto& s : pooled) per_sheet.push_back(sheet_overall_mean(s));
        all.overall_mean = mean_of(overall);
        all.overall_std = sample_std(per_sheet);
        report.cells.push_back(std::move(all));
    }

    std::vector<std::string> delta_scenarios = scenario_order;
    delta_scenarios.push_back("all");
    for (const auto& scenario : delta_scenarios) {
        const CellReport* ai = report.cell(scenario, AgentKind::ai);
        const CellReport* human = report.cell(scenario, AgentKind::human);
        if (!ai || !human) continue;
        for (std::size_t i = 0; i < ai->categories.size(); ++i) {
            report.deltas.push_back({scenario, ai->categories[i].category, ai->categories[i].mean - human->categories[i].mean});
        }
        report.deltas.push_back({scenario, "overall", ai->overall_mean - human->overall_mean});
    }
    return out;
}

Json to_json(const AggregateReport& r) {
    Json cells = Json::array();
    for (const auto& c : r.cells) {
        Json cats = Json::array();
        for (const auto& s : c.categories) cats.push_back({{"category", s.category}, {"mean", s.mean}, {"std", s.std}});
        Json crit = Json::object();
        for (const auto& [id, m] : c.criterion_means) crit[std::to_string(id)] = m;
        cells.push_back({{"scenario_id", c.scenario_id},
                         {"agent_kind", to_string(c.agent_kind)},
                         {"sheets", c.sheets},
                         {"categories", cats},
                         {"overall_mean", c.overall_mean},
                         {"overall_std", c.overall_std},
                         {"criterion_means", crit}});
    }
    Json deltas = Json::array();
    for (const auto& d : r.deltas) {
        deltas.push_back({{"scenario_id", d.scenario_id}, {"category", d.category}, {"ai_minus_human", d.ai_minus_human}});
    }
    return {{"rubric_signature", r.rubric_signature}, {"evaluators", r.evaluators}, {"cells", cells}, {"deltas", deltas}};
}

AggregateReport report_from_json(const Json& j) {
    try {
        AggregateReport r;
        r.rubric_signature = j.at("rubric_signature").get<std::string>();
        r.evaluators = j.at("evaluators").get<std::vector<std::string>>();
        for (const auto& c : j.at("cells")) {
            CellReport cell;
            cell.scenario_id = c.at("scenario_id").get<std::string>();
            const auto kind = parse_agent_kind(c.at("agent_kind").get<std::string>());
            if (!kind) throw ValidationError("agent_kind: expected human or ai");
            cell.agent_kind = *kind;
            cell.sheets = c.at("sheets").get<std::size_t>();
            for (const auto& s : c.at("categories")) {
                cell.categories.push_back(
                    {s.at("category").get<std::string>(), s.at("mean").get<double>(), s.at("std").get<double>()});
            }
            cell.overall_mean = c.at("overall_mean").get<double>();
            cell.overall_std = c.at("overall_std").get<double>();
            const Json crit = c.value("criterion_means", Json::object());
            for (const auto& [id, m] : crit.items()) {
                cell.criterion_means[std::stoi(id)] = m.get<double>();
            }
            r.cells.push_back(std::move(cell));
        }
        for (const auto& d : j.at("deltas")) {
            r.deltas.push_back({d.at("scenario_id").get<std::string>(), d.at("category").get<std::string>(),
                                d.at("ai_minus_human").get<double>()});
        }
        return r;
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("report: ") + e.what());
    }
}

std::string report_csv(const AggregateReport& r) {
    std::string out = "scenario_id,agent_kind,category,mean,std,sheets\n";
    char buf[64];
    auto row = [&](const CellReport& c, const std::string& category, double mean, double std) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f,", mean, std);
        out += c.scenario_id + "," + std::string(to_string(c.agent_kind)) + "," + category + "," + buf +
               std::to_string(c.sheets) + "\n";
    };
    for (const auto& c : r.cells) {
        for (const auto& s : c.categories) row(c, s.category, s.mean, s.std);
        row(c, "overall", c.overall_mean, c.overall_std);
    }
    return out;
}

// ---- comparison ------------------------------------------------------------------------

const ChangeRow* Comparison::change(std::string_view scenario, AgentKind kind, std::string_view category) const {
    for (const auto& c : changes) {
        if (c.scenario_id == scenario && c.agent_kind == kind && c.category == category) return &c;
    }
    return nullptr;
}

Comparison compare_reports(const AggregateReport& v1, const AggregateReport& v2, double threshold) {
    if (v1.rubric_signature != v2.rubric_signature) {
        throw ValidationError("mismatched rubrics: reports were scored against different rubrics");
    }
    auto cell_keys = [](const AggregateReport& r) {
        std::set<std::pair<std::string, AgentKind>> keys;
        for (const auto& c : r.cells) keys.insert({c.scenario_id, c.agent_kind});
        return keys;
    };
    if (cell_keys(v1) != cell_keys(v2)) {
        throw ValidationError("mismatched scenarios: reports cover different scenarios or agent kinds");
    }
    Comparison cmp;
    cmp.threshold = threshold;
    auto add = [&](const CellReport& a, const std::string& category, double x1, double x2) {
        ChangeRow row;
        row.scenario_id = a.scenario_id;
        row.agent_kind = a.agent_kind;
        row.category = category;
        row.v1 = x1;
        row.v2 = x2;
        row.delta = x2 - x1;
        row.pct_change = x1 != 0.0 ? (x2 - x1) / x1 * 100.0 : 0.0;
        row.flagged = std::abs(row.delta) > threshold;
        cmp.changes.push_back(row);
    };
    for (const auto& a : v1.cells) {
        const CellReport* b = v2.cell(a.scenario_id, a.agent_kind);
        for (std::size_t i = 0; i < a.categories.size(); ++i) {
            add(a, a.categories[i].category, a.categories[i].mean, b->categories.at(i).mean);
        }
        add(a, "overall", a.overall_mean, b->overall_mean);
    }
    for (const auto& [version, report] : {std::pair{"v1", &v1}, std::pair{"v2", &v2}}) {
        for (const auto& d : report->deltas) {
            cmp.deltas.push_back({version, d, std::abs(d.ai_minus_human) > threshold});
        }
    }
    return cmp;
}

Json to_json(const Comparison& c) {
    Json changes = Json::array();
    for (const auto& r : c.changes) {
        changes.push_back({{"scenario_id", r.scenario_id},
                           {"agent_kind", to_string(r.agent_kind)},
                           {"category", r.category},
                           {"v1", r.v1},
                           {"v2", r.v2},
                           {"delta", r.delta},
                           {"pct_change", r.pct_change},
                           {"flagged", r.flagged}});
    }
    Json deltas = Json::array();
    for (const auto& d : c.deltas) {
        deltas.push_back({{"version", d.version},
                          {"scenario_id", d.row.scenario_id},
                          {"category", d.row.category},
                          {"ai_minus_human", d.row.ai_minus_human},
                          {"flagged", d.flagged}});
    }
    return {{"threshold", c.threshold}, {"version_changes", changes}, {"ai_minus_human", deltas}};
}

}  // namespace voiceclone
