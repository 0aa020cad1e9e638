#include "voiceclone/knowledge.hpp"

#include "voiceclone/error.hpp"

namespace voiceclone {

namespace {

constexpr std::string_view kStageNames[] = {"opening", "value_proposition", "objection_handling",
                                            "closing"};

std::vector<std::string> strings_at(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_array()) {
        throw ValidationError(std::string(key) + ": expected array of strings");
    }
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) {
            throw ValidationError(std::string(key) + ": expected array of strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::string string_at(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw ValidationError(std::string(key) + ": expected string");
    }
    return it->get<std::string>();
}

}  // namespace

std::size_t KnowledgeManual::fact_count() const {
    std::size_t n = 0;
    for (const auto& [topic, facts] : topics) {
        n += facts.size();
    }
    return n;
}

std::string_view to_string(DialogueStage s) { return kStageNames[static_cast<int>(s)]; }

std::optional<DialogueStage> parse_dialogue_stage(std::string_view s) {
    for (int i = 0; i < kDialogueStageCount; ++i) {
        if (kStageNames[i] == s) {
            return static_cast<DialogueStage>(i);
        }
    }
    return std::nullopt;
}

std::vector<std::string> check_dialogue(const ExampleDialogue& d) {
    std::vector<std::string> problems;
    if (d.turns.empty()) {
        problems.emplace_back("dialogue has no turns");
    }
    if (d.turns.size() > kMaxDialogueTurns) {
        problems.push_back("dialogue has " + std::to_string(d.turns.size()) + " turns (max 8)");
    }
    if ((d.stage == DialogueStage::opening || d.stage == DialogueStage::closing) &&
        !d.turns.empty() && d.turns.front().speaker != Speaker::agent) {
        problems.push_back(std::string(to_string(d.stage)) + " dialogue must start with the agent");
    }
    return problems;
}

Json to_json(const JobDescription& jd) {
    Json j{{"tasks", jd.tasks},
           {"responsibilities", jd.responsibilities},
           {"style_notes", jd.style_notes},
           {"source_call_ids", jd.source_call_ids}};
    if (jd.primary_goal) {
        j["primary_goal"] = *jd.primary_goal;
    }
    return j;
}

Json to_json(const Fact& f) {
    return Json{{"statement", f.statement}, {"source_call_ids", f.source_call_ids}, {"topic", f.topic}};
}

Json to_json(const ObjectionTactic& o) {
    return Json{{"objection", o.objection}, {"tactic", o.tactic}, {"source_call_ids", o.source_call_ids}};
}

Json to_json(const KnowledgeManual& m) {
    Json topics = Json::object();
    for (const auto& [topic, facts] : m.topics) {
        Json arr = Json::array();
        for (const auto& f : facts) {
            arr.push_back(to_json(f));
        }
        topics[topic] = std::move(arr);
    }
    Json objections = Json::array();
    for (const auto& o : m.objections) {
        objections.push_back(to_json(o));
    }
    return Json{{"topics", std::move(topics)},
                {"objections", std::move(objections)},
                {"closing_strategies", m.closing_strategies}};
}

Json to_json(const ExampleDialogue& d) {
    Json turns = Json::array();
    for (const auto& t : d.turns) {
        turns.push_back(to_json(t));
    }
    return Json{{"stage", to_string(d.stage)},
                {"turns", std::move(turns)},
                {"source_call_ids", d.source_call_ids}};
}

JobDescription job_description_from_json(const Json& j) {
    if (!j.is_object()) {
        throw ValidationError("job description: expected object");
    }
    JobDescription jd;
    jd.tasks = strings_at(j, "tasks");
    jd.responsibilities = strings_at(j, "responsibilities");
    jd.style_notes = strings_at(j, "style_notes");
    jd.source_call_ids = strings_at(j, "source_call_ids");
    if (j.contains("primary_goal")) {
        jd.primary_goal = string_at(j, "primary_goal");
    }
    return jd;
}

Fact fact_from_json(const Json& j) {
    Fact f;
    f.statement = string_at(j, "statement");
    f.source_call_ids = strings_at(j, "source_call_ids");
    if (j.contains("topic")) {
        f.topic = string_at(j, "topic");
    }
    return f;
}

ObjectionTactic objection_from_json(const Json& j) {
    ObjectionTactic o;
    o.objection = string_at(j, "objection");
    o.tactic = string_at(j, "tactic");
    if (j.contains("source_call_ids")) {
        o.source_call_ids = strings_at(j, "source_call_ids");
    }
    return o;
}

KnowledgeManual manual_from_json(const Json& j) {
    KnowledgeManual m;
    const Json& topics = j.at("topics");
    for (auto it = topics.begin(); it != topics.end(); ++it) {
        auto& facts = m.topics[it.key()];
        for (const auto& f : it.value()) {
            facts.push_back(fact_from_json(f));
        }
    }
    for (const auto& o : j.at("objections")) {
        m.objections.push_back(objection_from_json(o));
    }
    m.closing_strategies = strings_at(j, "closing_strategies");
    return m;
}

ExampleDialogue dialogue_from_json(const Json& j) {
    ExampleDialogue d;
    const std::string stage = string_at(j, "stage");
    auto st = parse_dialogue_stage(stage);
    if (!st) {
        throw ValidationError("unknown dialogue stage '" + stage + "'");
    }
    d.stage = *st;
    auto it = j.find("turns");
    if (it == j.end() || !it->is_array()) {
        throw ValidationError("turns: expected array");
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
        d.turns.push_back(turn_from_json((*it)[i], "turns[" + std::to_string(i) + "]"));
    }
    d.source_call_ids = strings_at(j, "source_call_ids");
    return d;
}

}  // namespace voiceclone
