#include "voiceclone/playbook.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "voiceclone/error.hpp"
#include "voiceclone/text.hpp"

namespace voiceclone {

namespace {

constexpr std::string_view kFlowNames[] = {"opening", "discovery", "pitch", "objection_handling",
                                           "closing_followup"};
constexpr std::string_view kFlowTitles[] = {"Opening", "Discovery", "Pitch", "Objection handling",
                                            "Closing and follow-up"};

const std::regex& slot_regex() {
    static const std::regex re(R"(\{\{([a-z_][a-z0-9_]*)\}\})");
    return re;
}

std::string slot_name(std::string_view placeholder) {
    // "{{name}}" -> "name"
    return std::string(placeholder.substr(2, placeholder.size() - 4));
}

const Json& section(const Json& j, std::string_view key) { return j.at(std::string(key)); }

std::vector<std::string> string_list(const Json& j, std::string_view where) {
    if (!j.is_array()) {
        throw ValidationError(std::string(where) + ": expected array of strings");
    }
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string()) {
            throw ValidationError(std::string(where) + ": expected array of strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::string string_field(const Json& j, const char* key, std::string_view where) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw ValidationError(std::string(where) + "." + key + ": expected string");
    }
    return it->get<std::string>();
}

}  // namespace

std::string_view to_string(FlowStage s) { return kFlowNames[static_cast<int>(s)]; }

std::optional<FlowStage> parse_flow_stage(std::string_view s) {
    for (int i = 0; i < kFlowStageCount; ++i) {
        if (kFlowNames[i] == s) {
            return static_cast<FlowStage>(i);
        }
    }
    return std::nullopt;
}

std::string_view to_string(LintCode c) {
    switch (c) {
        case LintCode::AMBIGUOUS_OBJECTIVE: return "AMBIGUOUS_OBJECTIVE";
        case LintCode::REDUNDANT_INSTRUCTIONS: return "REDUNDANT_INSTRUCTIONS";
        case LintCode::FORMATTING_ARTEFACTS: return "FORMATTING_ARTEFACTS";
        case LintCode::OVERCAUTIOUS_POLITENESS: return "OVERCAUTIOUS_POLITENESS";
    }
    return "UNKNOWN";
}

std::string_view to_string(Severity s) { return s == Severity::error ? "error" : "warning"; }

const FlowStep* AgentPlaybook::stage(FlowStage s) const {
    for (const auto& step : conversation_flow) {
        if (step.stage == s) {
            return &step;
        }
    }
    return nullptr;
}

FlowStep* AgentPlaybook::stage(FlowStage s) {
    return const_cast<FlowStep*>(std::as_const(*this).stage(s));
}

std::vector<FlowStep> default_conversation_flow() {
    return {
        {FlowStage::opening,
         "Introduce yourself and the company, then confirm that it is a good time to talk."},
        {FlowStage::discovery,
         "Ask one or two questions to understand the customer's needs and how they use the service today."},
        {FlowStage::pitch,
         "Emphasise at least two product benefits that match what the customer told you."},
        {FlowStage::objection_handling,
         "Acknowledge each concern, respond with empathy and concrete value, and gently steer the "
         "conversation back on track when the customer drifts."},
        {FlowStage::closing_followup,
         "Attempt to schedule an installation, or arrange a follow-up call if the customer needs more time."},
    };
}

bool is_slot_placeholder(std::string_view s) {
    static const std::regex re(R"(^\{\{[a-z_][a-z0-9_]*\}\}$)");
    return std::regex_match(s.begin(), s.end(), re);
}

bool is_removal_rule(std::string_view rule) {
    return text::contains_ci(rule, "remove") && text::contains_ci(rule, "call list");
}

std::vector<std::string> check_playbook(const AgentPlaybook& pb) {
    std::vector<std::string> problems;
    bool order_ok = pb.conversation_flow.size() == kFlowStageCount;
    for (std::size_t i = 0; order_ok && i < pb.conversation_flow.size(); ++i) {
        order_ok = pb.conversation_flow[i].stage == static_cast<FlowStage>(i);
    }
    if (!order_ok) {
        problems.emplace_back(
            "stage order: expected opening, discovery, pitch, objection_handling, closing_followup");
    }
    const ContextSlots& cs = pb.context_slots;
    auto check_slot = [&](const std::string& value, const char* name) {
        if (!is_slot_placeholder(value)) {
            problems.push_back(std::string("context_slots.") + name + ": '" + value +
                               "' is not a {{slot_name}} placeholder");
        }
    };
    check_slot(cs.agent_name_slot, "agent_name_slot");
    check_slot(cs.agent_id_slot, "agent_id_slot");
    if (cs.customer_plan_slot) check_slot(*cs.customer_plan_slot, "customer_plan_slot");
    if (cs.customer_tenure_slot) check_slot(*cs.customer_tenure_slot, "customer_tenure_slot");
    if (std::none_of(pb.compliance_rules.begin(), pb.compliance_rules.end(),
                     [](const std::string& r) { return is_removal_rule(r); })) {
        problems.emplace_back("compliance_rules: no call-list removal rule");
    }
    for (std::size_t i = 0; i < pb.example_dialogues.size(); ++i) {
        for (const auto& p : check_dialogue(pb.example_dialogues[i])) {
            problems.push_back("example_dialogues[" + std::to_string(i) + "]: " + p);
        }
    }
    return problems;
}

// ---- serialization -------------------------------------------------------

Json to_json(const AgentPlaybook& pb) {
    const RoleDefinition& r = pb.role_definition;
    Json flow = Json::array();
    for (const auto& step : pb.conversation_flow) {
        flow.push_back(Json{{"stage", to_string(step.stage)}, {"guidance", step.guidance}});
    }
    Json tactics = Json::array();
    for (const auto& o : pb.objection_tactics) {
        tactics.push_back(to_json(o));
    }
    Json facts = Json::array();
    for (const auto& f : pb.product_knowledge) {
        facts.push_back(to_json(f));
    }
    Json terms = Json::array();
    for (const auto& t : pb.terminology_rules) {
        terms.push_back(Json{{"jargon", t.jargon}, {"replacement", t.replacement}});
    }
    Json dialogues = Json::array();
    for (const auto& d : pb.example_dialogues) {
        dialogues.push_back(to_json(d));
    }
    Json slots{{"agent_name_slot", pb.context_slots.agent_name_slot},
               {"agent_id_slot", pb.context_slots.agent_id_slot}};
    if (pb.context_slots.customer_plan_slot) {
        slots["customer_plan_slot"] = *pb.context_slots.customer_plan_slot;
    }
    if (pb.context_slots.customer_tenure_slot) {
        slots["customer_tenure_slot"] = *pb.context_slots.customer_tenure_slot;
    }
    return Json{{"role_definition",
                 {{"agent_name", r.agent_name},
                  {"company", r.company},
                  {"product", r.product},
                  {"primary_goal", r.primary_goal},
                  {"responsibilities", r.responsibilities}}},
                {"persona_style", pb.persona_style},
                {"conversation_flow", std::move(flow)},
                {"objection_tactics", std::move(tactics)},
                {"product_knowledge", std::move(facts)},
                {"terminology_rules", std::move(terms)},
                {"example_dialogues", std::move(dialogues)},
                {"compliance_rules", pb.compliance_rules},
                {"context_slots", std::move(slots)}};
}

AgentPlaybook playbook_from_json(const Json& j) {
    if (!j.is_object()) {
        throw ValidationError("playbook: expected JSON object");
    }
    std::vector<std::string> unknown;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(kSectionKeys.begin(), kSectionKeys.end(), it.key()) == kSectionKeys.end()) {
            unknown.push_back(it.key());
        }
    }
    if (!unknown.empty()) {
        throw ValidationError("unknown section(s): " + text::join(unknown, ", "));
    }
    std::vector<std::string> missing;
    for (auto key : kSectionKeys) {
        if (!j.contains(std::string(key))) {
            missing.emplace_back(key);
        }
    }
    if (!missing.empty()) {
        throw ValidationError("missing section(s): " + text::join(missing, ", "));
    }

    AgentPlaybook pb;
    try {
        const Json& role = section(j, "role_definition");
        pb.role_definition.agent_name = string_field(role, "agent_name", "role_definition");
        pb.role_definition.company = string_field(role, "company", "role_definition");
        pb.role_definition.product = string_field(role, "product", "role_definition");
        pb.role_definition.primary_goal = string_field(role, "primary_goal", "role_definition");
        if (role.contains("responsibilities")) {
            pb.role_definition.responsibilities =
                string_list(role.at("responsibilities"), "role_definition.responsibilities");
        }
        pb.persona_style = string_list(section(j, "persona_style"), "persona_style");

        for (const auto& step : section(j, "conversation_flow")) {
            const std::string name = string_field(step, "stage", "conversation_flow");
            auto st = parse_flow_stage(name);
            if (!st) {
                throw ValidationError("stage order: unknown stage '" + name + "'");
            }
            pb.conversation_flow.push_back({*st, string_field(step, "guidance", "conversation_flow")});
        }
        for (const auto& o : section(j, "objection_tactics")) {
            pb.objection_tactics.push_back(objection_from_json(o));
        }
        for (const auto& f : section(j, "product_knowledge")) {
            pb.product_knowledge.push_back(fact_from_json(f));
        }
        for (const auto& t : section(j, "terminology_rules")) {
            pb.terminology_rules.push_back({string_field(t, "jargon", "terminology_rules"),
                                            string_field(t, "replacement", "terminology_rules")});
        }
        for (const auto& d : section(j, "example_dialogues")) {
            pb.example_dialogues.push_back(dialogue_from_json(d));
        }
        pb.compliance_rules = string_list(section(j, "compliance_rules"), "compliance_rules");

        const Json& slots = section(j, "context_slots");
        pb.context_slots.agent_name_slot = string_field(slots, "agent_name_slot", "context_slots");
        pb.context_slots.agent_id_slot = string_field(slots, "agent_id_slot", "context_slots");
        if (slots.contains("customer_plan_slot")) {
            pb.context_slots.customer_plan_slot =
                string_field(slots, "customer_plan_slot", "context_slots");
        }
        if (slots.contains("customer_tenure_slot")) {
            pb.context_slots.customer_tenure_slot =
                string_field(slots, "customer_tenure_slot", "context_slots");
        }
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("playbook: malformed section: ") + e.what());
    }

    auto problems = check_playbook(pb);
    if (!problems.empty()) {
        throw ValidationError(problems.front());
    }
    return pb;
}

std::string playbook_to_canonical_json(const AgentPlaybook& pb) { return canonical_json(to_json(pb)); }

AgentPlaybook load_playbook(const std::filesystem::path& path) {
    return playbook_from_json(parse_json_file(path));
}

AgentPlaybook roundtrip(const AgentPlaybook& pb) {
    return playbook_from_json(Json::parse(playbook_to_canonical_json(pb)));
}

// ---- rendering -----------------------------------------------------------

bool has_list_marker(std::string_view body) {
    static const std::regex marker(R"(^\s*(\d+[.)]|•|[*\-])(\s|$))");
    if (text::contains_ci(body, "point number")) {
        return true;
    }
    std::size_t pos = 0;
    while (pos <= body.size()) {
        std::size_t nl = body.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = body.size();
        }
        const std::string line(body.substr(pos, nl - pos));
        if (std::regex_search(line, marker)) {
            return true;
        }
        pos = nl + 1;
    }
    return false;
}

namespace {

std::string render_dialogue(const ExampleDialogue& d) {
    std::string out;
    switch (d.stage) {
        case DialogueStage::opening: out = "Example of a good opening:"; break;
        case DialogueStage::value_proposition: out = "Example of presenting the value proposition:"; break;
        case DialogueStage::objection_handling: out = "Example of handling an objection:"; break;
        case DialogueStage::closing: out = "Example of a good closing:"; break;
    }
    for (const auto& t : d.turns) {
        out += "\n";
        out += t.speaker == Speaker::agent ? "Agent: " : "Customer: ";
        out += t.text;
    }
    return out;
}

std::string sentences_paragraph(const std::vector<std::string>& items) {
    std::vector<std::string> parts;
    parts.reserve(items.size());
    for (const auto& s : items) {
        parts.push_back(text::as_sentence(s));
    }
    return text::join(parts, " ");
}

std::string substitute_slots(const std::string& body, const SlotValues& values) {
    std::string out;
    auto begin = std::sregex_iterator(body.begin(), body.end(), slot_regex());
    std::size_t last = 0;
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        const std::string name = m[1].str();
        auto v = values.find(name);
        if (v == values.end()) {
            throw ValidationError("missing slot value for {{" + name + "}}");
        }
        out.append(body, last, static_cast<std::size_t>(m.position(0)) - last);
        out += v->second;
        last = static_cast<std::size_t>(m.position(0) + m.length(0));
    }
    out.append(body, last, std::string::npos);
    return out;
}

}  // namespace

std::string render_system_prompt(const AgentPlaybook& pb, const SlotValues& slot_values) {
    const ContextSlots& cs = pb.context_slots;
    auto require_slot = [&](const std::string& placeholder, const char* field) {
        if (!is_slot_placeholder(placeholder)) {
            throw ValidationError(std::string("context_slots.") + field + " is not a placeholder");
        }
        if (!slot_values.contains(slot_name(placeholder))) {
            throw ValidationError(std::string("missing slot value: ") + field + " (" + placeholder + ")");
        }
    };
    require_slot(cs.agent_name_slot, "agent_name_slot");
    require_slot(cs.agent_id_slot, "agent_id_slot");
    if (cs.customer_plan_slot) require_slot(*cs.customer_plan_slot, "customer_plan_slot");
    if (cs.customer_tenure_slot) require_slot(*cs.customer_tenure_slot, "customer_tenure_slot");

    const RoleDefinition& r = pb.role_definition;
    std::vector<std::string> body(kSectionTitles.size());

    body[0] = "You are " + r.agent_name + ", a virtual telesales agent calling from " + r.company +
              " to inform customers about the " + r.product + ". Your primary goal is to " +
              text::as_sentence(r.primary_goal);
    if (!r.responsibilities.empty()) {
        body[0] += " " + sentences_paragraph(r.responsibilities);
    }

    body[1] = sentences_paragraph(pb.persona_style);

    {
        std::string flow = "A typical call moves through five stages, opening, discovery, pitch, "
                           "objection handling and closing with follow-up.";
        for (const auto& step : pb.conversation_flow) {
            flow += "\n";
            flow += kFlowTitles[static_cast<int>(step.stage)];
            flow += ": ";
            flow += text::as_sentence(step.guidance);
        }
        body[2] = flow;
    }

    if (pb.objection_tactics.empty()) {
        body[3] = "Respond to any concern with empathy and concrete value.";
    } else {
        std::vector<std::string> lines;
        for (const auto& o : pb.objection_tactics) {
            lines.push_back("When the customer says \"" + o.objection +
                            "\", you can answer along these lines: \"" + o.tactic + "\"");
        }
        body[3] = text::join(lines, "\n");
    }

    if (pb.product_knowledge.empty()) {
        body[4] = "Only share product details that you have been given.";
    } else {
        std::vector<std::string> statements;
        for (const auto& f : pb.product_knowledge) {
            statements.push_back(f.statement);
        }
        body[4] = "Use only these facts when describing the product. " + sentences_paragraph(statements);
    }

    {
        std::string terms = "Use plain, customer-friendly language and explain any internal jargon.";
        for (const auto& t : pb.terminology_rules) {
            terms += " Say \"" + t.replacement + "\" instead of \"" + t.jargon + "\".";
        }
        body[5] = terms;
    }

    if (pb.example_dialogues.empty()) {
        body[6] = "No example dialogue is provided.";
    } else {
        std::vector<std::string> blocks{
            "These short examples show good practice. Do not repeat them word for word."};
        for (const auto& d : pb.example_dialogues) {
            blocks.push_back(render_dialogue(d));
        }
        body[6] = text::join(blocks, "\n");
    }

    body[7] = sentences_paragraph(pb.compliance_rules);

    {
        std::string ctx = "You are speaking as " + cs.agent_name_slot + " with agent ID " +
                          cs.agent_id_slot + ".";
        if (cs.customer_plan_slot) {
            ctx += " The customer is currently on the " + *cs.customer_plan_slot + " plan.";
        }
        if (cs.customer_tenure_slot) {
            ctx += " The customer has been with us for " + *cs.customer_tenure_slot +
                   ", so mention loyalty offers where they apply.";
        }
        ctx += " Use this context to personalise the call.";
        body[8] = ctx;
    }

    std::string out;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (i > 0) {
            out += "\n";
        }
        out += kSectionTitles[i];
        out += "\n";
        out += body[i];
        out += "\n";
    }
    return substitute_slots(out, slot_values);
}

// ---- lint ----------------------------------------------------------------

double trigram_overlap(std::string_view a, std::string_view b) {
    auto grams = [](std::string_view s) {
        const auto w = text::words(s);
        std::set<std::string> out;
        for (std::size_t i = 0; i + 2 < w.size(); ++i) {
            out.insert(w[i] + " " + w[i + 1] + " " + w[i + 2]);
        }
        return out;
    };
    const auto ga = grams(a);
    const auto gb = grams(b);
    if (ga.empty() || gb.empty()) {
        return 0.0;
    }
    std::size_t shared = 0;
    for (const auto& g : ga) {
        shared += gb.count(g);
    }
    return static_cast<double>(shared) / static_cast<double>(std::min(ga.size(), gb.size()));
}

bool is_politeness_directive(std::string_view s) {
    static const char* const kPhrases[] = {"polite",     "politely",         "politeness",
                                           "courteous",  "respectful",       "never interrupt",
                                           "do not interrupt", "let the customer finish",
                                           "apologise",  "apologize",        "yield"};
    return std::any_of(std::begin(kPhrases), std::end(kPhrases),
                       [&](const char* p) { return text::contains_word(s, p); });
}

bool is_steering_example(std::string_view s) {
    static const char* const kPhrases[] = {"steer", "redirect", "coming back to", "back on track",
                                           "bring the conversation back", "return to"};
    return std::any_of(std::begin(kPhrases), std::end(kPhrases),
                       [&](const char* p) { return text::contains_word(s, p); });
}

bool has_goal_verb(std::string_view goal, const std::vector<std::string>& verbs) {
    return std::any_of(verbs.begin(), verbs.end(),
                       [&](const std::string& v) { return text::contains_word(goal, v); });
}

namespace {

struct Located {
    std::string location;
    const std::string* text;
};

std::vector<Located> text_fields(const AgentPlaybook& pb) {
    std::vector<Located> out;
    const auto& r = pb.role_definition;
    out.push_back({"role_definition.agent_name", &r.agent_name});
    out.push_back({"role_definition.company", &r.company});
    out.push_back({"role_definition.product", &r.product});
    out.push_back({"role_definition.primary_goal", &r.primary_goal});
    for (std::size_t i = 0; i < r.responsibilities.size(); ++i) {
        out.push_back({"role_definition.responsibilities[" + std::to_string(i) + "]", &r.responsibilities[i]});
    }
    for (std::size_t i = 0; i < pb.persona_style.size(); ++i) {
        out.push_back({"persona_style[" + std::to_string(i) + "]", &pb.persona_style[i]});
    }
    for (const auto& step : pb.conversation_flow) {
        out.push_back({"conversation_flow." + std::string(to_string(step.stage)), &step.guidance});
    }
    for (std::size_t i = 0; i < pb.objection_tactics.size(); ++i) {
        const std::string at = "objection_tactics[" + std::to_string(i) + "]";
        out.push_back({at + ".objection", &pb.objection_tactics[i].objection});
        out.push_back({at + ".tactic", &pb.objection_tactics[i].tactic});
    }
    for (std::size_t i = 0; i < pb.product_knowledge.size(); ++i) {
        out.push_back({"product_knowledge[" + std::to_string(i) + "].statement",
                       &pb.product_knowledge[i].statement});
    }
    for (std::size_t i = 0; i < pb.terminology_rules.size(); ++i) {
        const std::string at = "terminology_rules[" + std::to_string(i) + "]";
        out.push_back({at + ".jargon", &pb.terminology_rules[i].jargon});
        out.push_back({at + ".replacement", &pb.terminology_rules[i].replacement});
    }
    for (std::size_t i = 0; i < pb.example_dialogues.size(); ++i) {
        const auto& d = pb.example_dialogues[i];
        for (std::size_t k = 0; k < d.turns.size(); ++k) {
            out.push_back({"example_dialogues[" + std::to_string(i) + "].turns[" + std::to_string(k) + "].text",
                           &d.turns[k].text});
        }
    }
    for (std::size_t i = 0; i < pb.compliance_rules.size(); ++i) {
        out.push_back({"compliance_rules[" + std::to_string(i) + "]", &pb.compliance_rules[i]});
    }
    return out;
}

std::vector<Located> directives(const AgentPlaybook& pb) {
    std::vector<Located> out;
    const auto& r = pb.role_definition;
    for (std::size_t i = 0; i < r.responsibilities.size(); ++i) {
        out.push_back({"role_definition.responsibilities[" + std::to_string(i) + "]", &r.responsibilities[i]});
    }
    for (std::size_t i = 0; i < pb.persona_style.size(); ++i) {
        out.push_back({"persona_style[" + std::to_string(i) + "]", &pb.persona_style[i]});
    }
    for (const auto& step : pb.conversation_flow) {
        out.push_back({"conversation_flow." + std::string(to_string(step.stage)), &step.guidance});
    }
    for (std::size_t i = 0; i < pb.compliance_rules.size(); ++i) {
        out.push_back({"compliance_rules[" + std::to_string(i) + "]", &pb.compliance_rules[i]});
    }
    return out;
}

std::string format_ratio(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::vector<LintDiagnostic> lint_playbook(const AgentPlaybook& pb, const LintConfig& config) {
    std::vector<LintDiagnostic> out;

    const std::string goal = text::trim(pb.role_definition.primary_goal);
    if (goal.empty()) {
        out.push_back({LintCode::AMBIGUOUS_OBJECTIVE, Severity::error, "role_definition.primary_goal",
                       "primary goal is empty; state one concrete success criterion"});
    } else if (!has_goal_verb(goal, config.goal_verbs)) {
        out.push_back({LintCode::AMBIGUOUS_OBJECTIVE, Severity::error, "role_definition.primary_goal",
                       "primary goal has no actionable verb (" + text::join(config.goal_verbs, ", ") + ")"});
    }

    for (const auto& field : text_fields(pb)) {
        if (has_list_marker(*field.text)) {
            out.push_back({LintCode::FORMATTING_ARTEFACTS, Severity::error, field.location,
                           "list marker in prompt text; rewrite as prose"});
        }
    }

    const auto dirs = directives(pb);
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        for (std::size_t k = i + 1; k < dirs.size(); ++k) {
            const double overlap = trigram_overlap(*dirs[i].text, *dirs[k].text);
            if (overlap >= config.redundancy_threshold) {
                out.push_back({LintCode::REDUNDANT_INSTRUCTIONS, Severity::warning, dirs[k].location,
                               "repeats " + dirs[i].location + " (3-gram overlap " + format_ratio(overlap) + ")"});
            }
        }
    }

    std::size_t polite = 0;
    for (const auto& d : pb.persona_style) {
        polite += is_politeness_directive(d) ? 1 : 0;
    }
    std::size_t steering = 0;
    for (const auto& d : pb.persona_style) steering += is_steering_example(d) ? 1 : 0;
    for (const auto& s : pb.conversation_flow) steering += is_steering_example(s.guidance) ? 1 : 0;
    for (const auto& o : pb.objection_tactics) steering += is_steering_example(o.tactic) ? 1 : 0;
    for (const auto& d : pb.example_dialogues) {
        for (const auto& t : d.turns) {
            steering += t.speaker == Speaker::agent && is_steering_example(t.text) ? 1 : 0;
        }
    }
    if (static_cast<double>(polite) > config.politeness_ratio * static_cast<double>(steering)) {
        out.push_back({LintCode::OVERCAUTIOUS_POLITENESS, Severity::warning, "persona_style",
                       std::to_string(polite) + " politeness directives against " +
                           std::to_string(steering) + " steering examples"});
    }
    return out;
}

bool has_errors(const std::vector<LintDiagnostic>& diags) {
    return std::any_of(diags.begin(), diags.end(),
                       [](const LintDiagnostic& d) { return d.severity == Severity::error; });
}

// ---- fine-tune export ------------------------------------------------------

namespace {

std::string question_for_fact(const Fact& f) {
    static const std::set<std::string> verbs = {"is", "are", "costs", "cost", "gives", "give",
                                                "includes", "include", "takes", "take", "can",
                                                "has", "have", "comes", "lets", "offers", "applies",
                                                "apply", "does"};
    // Split the original text on spaces so the subject keeps its casing.
    std::vector<std::string> tokens;
    {
        std::string cur;
        for (char c : f.statement) {
            if (c == ' ') {
                if (!cur.empty()) tokens.push_back(std::move(cur));
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!cur.empty()) tokens.push_back(std::move(cur));
    }
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (verbs.contains(text::to_lower(tokens[i]))) {
            std::vector<std::string> subject(tokens.begin(), tokens.begin() + static_cast<long>(i));
            std::string s = text::join(subject, " ");
            if (!s.empty() && subject.front() != "I" && std::isupper(static_cast<unsigned char>(s[0])) &&
                (subject.size() == 1 || std::islower(static_cast<unsigned char>(subject[1][0])))) {
                s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
            }
            while (!s.empty() && (s.back() == ',' || s.back() == '.')) s.pop_back();
            return "Can you tell me about " + s + "?";
        }
    }
    return "Can you tell me more about the " + (f.topic.empty() ? std::string("product") : f.topic) + "?";
}

}  // namespace

std::vector<QaPair> export_finetune_dataset(const KnowledgeManual& manual, std::size_t target_n) {
    if (target_n == 0) {
        throw ValidationError("target_n must be at least 1");
    }
    if (manual.empty()) {
        throw ValidationError("knowledge manual is empty");
    }
    std::vector<QaPair> out;
    std::size_t product_pairs = 0;
    for (const auto& [topic, facts] : manual.topics) {
        for (std::size_t i = 0; i < facts.size() && product_pairs < target_n; ++i) {
            out.push_back({question_for_fact(facts[i]), facts[i].statement,
                           "fact:" + topic + ":" + std::to_string(i)});
            ++product_pairs;
        }
    }
    for (std::size_t i = 0; i < manual.objections.size(); ++i) {
        const auto& o = manual.objections[i];
        out.push_back({text::as_sentence(o.objection), o.tactic, "objection:" + std::to_string(i)});
    }
    return out;
}

std::string finetune_jsonl(const std::vector<QaPair>& pairs) {
    std::string out;
    for (const auto& p : pairs) {
        out += Json{{"question", p.question}, {"answer", p.answer}}.dump();
        out.push_back('\n');
    }
    return out;
}

}  // namespace voiceclone
