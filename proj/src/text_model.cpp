#include "voiceclone/text_model.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <regex>
#include <set>

#include "voiceclone/error.hpp"
#include "voiceclone/knowledge.hpp"
#include "voiceclone/text.hpp"

namespace voiceclone {

std::string job_description_instruction() {
    return "TASK: job_description\n"
           "Read the transcripts of high-performing telesales calls. Summarise the agent's tasks, "
           "responsibilities and conversational style. Answer with JSON: {\"tasks\": [..], "
           "\"responsibilities\": [..], \"style_notes\": [..], \"source_call_ids\": [..]}.";
}

std::string knowledge_instruction(std::string_view topic) {
    return "TASK: knowledge\nTOPIC: " + std::string(topic) +
           "\nFrom these calls about the topic, extract product details, common objections with the "
           "agent tactic that answered them, and closing strategies. Cite call_ids for every item. "
           "Answer with JSON: {\"facts\": [{\"statement\", \"source_call_ids\"}], \"objections\": "
           "[{\"objection\", \"tactic\", \"source_call_ids\"}], \"closing_strategies\": [..]}.";
}

std::string dialogue_instruction() {
    return "TASK: example_dialogues\n"
           "Distil short representative exchanges showing an opening, a value proposition, objection "
           "handling and a closing. Keep each under eight turns and anonymise names. Answer with JSON: "
           "{\"dialogues\": [{\"stage\", \"turns\", \"source_call_ids\"}]}.";
}

namespace {

struct Instruction {
    std::string task;
    std::string topic;
};

Instruction parse_instruction(std::string_view instruction) {
    Instruction out;
    std::size_t pos = 0;
    while (pos < instruction.size()) {
        std::size_t nl = instruction.find('\n', pos);
        if (nl == std::string_view::npos) nl = instruction.size();
        const std::string line = text::trim(instruction.substr(pos, nl - pos));
        if (line.rfind("TASK:", 0) == 0) out.task = text::trim(line.substr(5));
        if (line.rfind("TOPIC:", 0) == 0) out.topic = text::trim(line.substr(6));
        pos = nl + 1;
    }
    return out;
}

bool any_word(std::string_view s, std::initializer_list<std::string_view> phrases) {
    return std::any_of(phrases.begin(), phrases.end(),
                       [&](std::string_view p) { return text::contains_word(s, p); });
}

const std::vector<std::string>& product_terms() {
    static const std::vector<std::string> terms = {"internet package", "fiber", "Mbps", "router",
                                                   "Wi-Fi", "installation", "promotion"};
    return terms;
}

bool has_product_term(std::string_view s) {
    return std::any_of(product_terms().begin(), product_terms().end(),
                       [&](const std::string& t) { return text::contains_word(s, t); });
}

std::vector<std::string> topic_keywords(const std::string& topic) {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"price", {"baht", "price", "promotion", "free", "cost", "budget"}},
        {"speed", {"mbps", "speed", "fiber", "stream", "streaming"}},
        {"installation", {"install", "installation", "technician", "saturday", "weekend"}},
        {"contract", {"contract", "trial", "cancel", "months"}},
    };
    auto it = table.find(topic);
    return it != table.end() ? it->second : std::vector<std::string>{topic};
}

bool is_first_person(std::string_view sentence) {
    for (const auto& w : text::words(sentence)) {
        if (w == "i" || w == "me" || w == "my" || w == "let") return true;
    }
    return false;
}

std::string strip_customer_name(const std::string& s) {
    static const std::regex with_comma(R"(, Khun [A-Z][a-z]+)");
    static const std::regex bare(R"(Khun [A-Z][a-z]+,? ?)");
    std::string out = std::regex_replace(s, with_comma, "");
    return text::trim(std::regex_replace(out, bare, ""));
}

std::string anonymise_dialogue_text(const std::string& s) {
    static const std::regex agent(R"((this is|my name is) [A-Z][a-z]+)");
    static const std::regex customer(R"(Khun [A-Z][a-z]+)");
    std::string out = std::regex_replace(s, agent, "$1 {{agent_name}}");
    return std::regex_replace(out, customer, "Khun Somchai");
}

struct Tally {
    std::string text;
    std::set<std::string> sources;
    std::size_t first_seen = 0;
};

// Item ordering for extracted material: most-cited first, then first seen.
std::vector<Tally> ranked(std::map<std::string, Tally> items) {
    std::vector<Tally> out;
    for (auto& [k, v] : items) out.push_back(std::move(v));
    std::stable_sort(out.begin(), out.end(), [](const Tally& a, const Tally& b) {
        if (a.sources.size() != b.sources.size()) return a.sources.size() > b.sources.size();
        return a.first_seen < b.first_seen;
    });
    return out;
}

Json ids(const std::set<std::string>& s) { return Json(std::vector<std::string>(s.begin(), s.end())); }

// ---- job description ----------------------------------------------------

struct JdRule {
    enum class Target { task, responsibility, style } target;
    std::string item;
    bool (*matches)(const CallRecord&, const Turn&);
};

Json job_description(std::span<const CallRecord> calls) {
    // Most frequently mentioned product term drives the pitch task.
    std::string top_term;
    std::size_t top_count = 0;
    for (const auto& term : product_terms()) {
        std::size_t n = 0;
        for (const auto& c : calls)
            for (const auto& t : c.turns)
                if (t.speaker == Speaker::agent && text::contains_word(t.text, term)) ++n;
        if (n > top_count) {
            top_count = n;
            top_term = term;
        }
    }

    using T = JdRule::Target;
    std::vector<JdRule> rules = {
        {T::task, "Greet the customer by name and introduce yourself and the company",
         [](const CallRecord&, const Turn& t) {
             return t.speaker == Speaker::agent && any_word(t.text, {"sawaddee", "hello", "my name is", "this is"});
         }},
        {T::task, "Confirm that it is a good time to talk before presenting the offer",
         [](const CallRecord&, const Turn& t) {
             return t.speaker == Speaker::agent && any_word(t.text, {"good time", "a moment", "two minutes"});
         }},
        {T::task, "Ask one or two discovery questions about how the customer uses the service",
         [](const CallRecord&, const Turn& t) {
             return t.speaker == Speaker::agent && t.text.find('?') != std::string::npos &&
                    any_word(t.text, {"how do you", "which provider", "do you work"});
         }},
        {T::task, "", nullptr},  // pitch task, filled below
        {T::task, "Close by scheduling an installation appointment or a follow-up call",
         [](const CallRecord&, const Turn& t) {
             return t.speaker == Speaker::agent && any_word(t.text, {"schedule", "book", "appointment"});
         }},
        {T::responsibility, "Acknowledge objections with empathy and answer them with concrete value",
         [](const CallRecord&, const Turn& t) {
             return t.speaker == Speaker::customer && !MockExtractor::classify_objection(t.text).empty();
         }},
        {T::responsibility, "Remove the customer from the call list whenever they ask",
         [](const CallRecord&, const Turn& t) {
             return text::contains_word(t.text, "remove") && text::contains_ci(t.text, "call list");
         }},
        {T::responsibility, "Arrange a follow-up call when the customer needs more time",
         [](const CallRecord&, const Turn& t) {
             return t.speaker == Speaker::agent && any_word(t.text, {"call you back", "follow up"});
         }},
        {T::responsibility, "Explain the trial period and cancellation terms accurately",
         [](const CallRecord&, const Turn& t) {
             return t.speaker == Speaker::agent && text::contains_word(t.text, "trial period");
         }},
        {T::style, "Address the customer by name with the Khun honorific",
         [](const CallRecord&, const Turn& t) {
             return t.speaker == Speaker::agent && text::contains_word(t.text, "khun");
         }},
        {T::style, "Greet with the Thai polite particle ka, as in Sawaddee ka",
         [](const CallRecord&, const Turn& t) {
             return t.speaker == Speaker::agent && text::contains_word(t.text, "sawaddee ka");
         }},
        {T::style, "Show empathy before answering a concern",
         [](const CallRecord&, const Turn& t) {
             return t.speaker == Speaker::agent && any_word(t.text, {"i understand", "i hear you"});
         }},
        {T::style, "Gently steer drifting conversations back to the customer's needs",
         [](const CallRecord&, const Turn& t) {
             return t.speaker == Speaker::agent && any_word(t.text, {"coming back to", "back on track"});
         }},
    };
    if (!top_term.empty()) {
        rules[3].item = "Present the " + top_term + " offer and explain at least two of its benefits";
        rules[3].matches = nullptr;
    }

    Json tasks = Json::array(), resp = Json::array(), style = Json::array();
    std::set<std::string> all_sources;
    for (std::size_t r = 0; r < rules.size(); ++r) {
        const JdRule& rule = rules[r];
        if (rule.item.empty()) continue;
        std::set<std::string> sources;
        for (const auto& c : calls) {
            for (const auto& t : c.turns) {
                const bool hit = rule.matches ? rule.matches(c, t)
                                              : t.speaker == Speaker::agent && text::contains_word(t.text, top_term);
                if (hit) {
                    sources.insert(c.call_id);
                    break;
                }
            }
        }
        if (sources.empty()) continue;
        all_sources.insert(sources.begin(), sources.end());
        Json& target = rule.target == T::task ? tasks : rule.target == T::responsibility ? resp : style;
        target.push_back(rule.item);
    }

    // Short turns are part of the style when the exemplars keep them short.
    std::size_t agent_turns = 0, agent_words = 0;
    for (const auto& c : calls)
        for (const auto& t : c.turns)
            if (t.speaker == Speaker::agent) {
                ++agent_turns;
                agent_words += text::words(t.text).size();
            }
    bool cites_every_call = false;
    if (agent_turns > 0 && agent_words <= 35 * agent_turns) {
        style.push_back("Keep each turn short and conversational");
        cites_every_call = true;
    }
    // Fallback items summarise the whole batch.
    if (tasks.empty() || resp.empty() || style.empty()) cites_every_call = true;
    if (tasks.empty()) tasks.push_back("Hold a friendly sales conversation about the product");
    if (resp.empty()) resp.push_back("Answer customer questions accurately");
    if (style.empty()) style.push_back("Speak in a warm and professional tone");
    if (cites_every_call) {
        for (const auto& c : calls) all_sources.insert(c.call_id);
    }

    return Json{{"tasks", tasks}, {"responsibilities", resp}, {"style_notes", style},
                {"source_call_ids", ids(all_sources)}};
}

// ---- knowledge ------------------------------------------------------------

Json knowledge(const std::string& topic, std::span<const CallRecord> calls) {
    const auto keywords = topic_keywords(topic);
    auto on_topic = [&](std::string_view s) {
        return std::any_of(keywords.begin(), keywords.end(),
                           [&](const std::string& k) { return text::contains_word(s, k); });
    };

    std::map<std::string, Tally> facts;
    std::map<std::string, std::map<std::string, Tally>> replies;  // label -> reply -> tally
    std::map<std::string, Tally> closings;
    std::size_t seen = 0;

    for (const auto& c : calls) {
        for (std::size_t i = 0; i < c.turns.size(); ++i) {
            const Turn& t = c.turns[i];
            if (t.speaker == Speaker::customer) {
                const std::string label = MockExtractor::classify_objection(t.text);
                if (!label.empty() && i + 1 < c.turns.size() && c.turns[i + 1].speaker == Speaker::agent) {
                    const std::string reply = strip_customer_name(c.turns[i + 1].text);
                    Tally& tally = replies[label][reply];
                    if (tally.sources.empty()) {
                        tally.text = reply;
                        tally.first_seen = seen;
                    }
                    tally.sources.insert(c.call_id);
                    ++seen;
                }
                continue;
            }
            const bool answers_objection =
                i > 0 && c.turns[i - 1].speaker == Speaker::customer &&
                !MockExtractor::classify_objection(c.turns[i - 1].text).empty();
            if (!answers_objection) {
                for (const auto& s : text::sentences(t.text)) {
                    const bool factual = s.back() != '?' && !is_first_person(s) &&
                                         (has_product_term(s) || std::any_of(s.begin(), s.end(), ::isdigit)) &&
                                         on_topic(s);
                    if (!factual) continue;
                    Tally& tally = facts[s];
                    if (tally.sources.empty()) {
                        tally.text = s;
                        tally.first_seen = seen++;
                    }
                    tally.sources.insert(c.call_id);
                }
            }
            if (is_conversion(c.outcome) && any_word(t.text, {"schedule", "book", "appointment"})) {
                const std::string s = strip_customer_name(t.text);
                Tally& tally = closings[s];
                if (tally.sources.empty()) {
                    tally.text = s;
                    tally.first_seen = seen++;
                }
                tally.sources.insert(c.call_id);
            }
        }
    }

    Json fact_list = Json::array();
    std::size_t n = 0;
    for (const auto& f : ranked(facts)) {
        if (n++ == 8) break;
        fact_list.push_back(Json{{"statement", f.text}, {"source_call_ids", ids(f.sources)}});
    }

    struct Objection {
        std::string label;
        Tally best;
        std::set<std::string> sources;
    };
    std::vector<Objection> objections;
    for (auto& [label, by_reply] : replies) {
        Objection o{label, {}, {}};
        auto r = ranked(by_reply);
        o.best = r.front();
        for (const auto& t : r) o.sources.insert(t.sources.begin(), t.sources.end());
        objections.push_back(std::move(o));
    }
    std::stable_sort(objections.begin(), objections.end(), [](const Objection& a, const Objection& b) {
        if (a.sources.size() != b.sources.size()) return a.sources.size() > b.sources.size();
        return a.label < b.label;
    });
    Json objection_list = Json::array();
    for (const auto& o : objections) {
        objection_list.push_back(
            Json{{"objection", o.label}, {"tactic", o.best.text}, {"source_call_ids", ids(o.sources)}});
    }

    Json closing_list = Json::array();
    n = 0;
    for (const auto& c : ranked(closings)) {
        if (n++ == 3) break;
        closing_list.push_back(c.text);
    }
    return Json{{"topic", topic},
                {"facts", fact_list},
                {"objections", objection_list},
                {"closing_strategies", closing_list}};
}

// ---- dialogues ------------------------------------------------------------

Json window(const CallRecord& c, std::size_t first, std::size_t last, DialogueStage stage) {
    Json turns = Json::array();
    const std::int64_t base = c.turns[first].start_ms;
    for (std::size_t i = first; i <= last; ++i) {
        const Turn& t = c.turns[i];
        turns.push_back(Json{{"speaker", to_string(t.speaker)},
                             {"text", anonymise_dialogue_text(t.text)},
                             {"start_ms", t.start_ms - base},
                             {"end_ms", t.end_ms - base}});
    }
    return Json{{"stage", to_string(stage)}, {"turns", turns}, {"source_call_ids", Json::array({c.call_id})}};
}

Json dialogues(std::span<const CallRecord> calls, std::uint64_t seed) {
    std::vector<std::vector<Json>> by_stage(kDialogueStageCount);
    std::vector<Json> steering;
    std::vector<Json> late_closings;  // closings from calls that did not convert

    for (const auto& c : calls) {
        const auto& t = c.turns;
        if (t.size() >= 2 && t[0].speaker == Speaker::agent) {
            by_stage[0].push_back(window(c, 0, 1, DialogueStage::opening));
        }
        for (std::size_t p = 0; p < t.size(); ++p) {
            if (t[p].speaker == Speaker::agent && has_product_term(t[p].text) &&
                t[p].text.find('?') == std::string::npos) {
                std::size_t first = p;
                if (p >= 2 && t[p - 2].speaker == Speaker::agent) first = p - 2;
                by_stage[1].push_back(window(c, first, p, DialogueStage::value_proposition));
                break;
            }
        }
        for (std::size_t o = 0; o + 1 < t.size(); ++o) {
            if (t[o].speaker == Speaker::customer && t[o + 1].speaker == Speaker::agent &&
                !MockExtractor::classify_objection(t[o].text).empty()) {
                by_stage[2].push_back(window(c, o, o + 1, DialogueStage::objection_handling));
                break;
            }
        }
        for (std::size_t s = 1; s < t.size(); ++s) {
            if (t[s].speaker == Speaker::agent && t[s - 1].speaker == Speaker::customer &&
                any_word(t[s].text, {"coming back to", "back on track"})) {
                steering.push_back(window(c, s - 1, s, DialogueStage::objection_handling));
                break;
            }
        }
        for (std::size_t k = t.size(); k-- > 0;) {
            if (t[k].speaker == Speaker::agent &&
                any_word(t[k].text, {"schedule", "book", "appointment", "call you back"})) {
                const std::size_t last = std::min(k + 1, t.size() - 1);
                (is_conversion(c.outcome) ? by_stage[3] : late_closings)
                    .push_back(window(c, k, last, DialogueStage::closing));
                break;
            }
        }
    }
    by_stage[3].insert(by_stage[3].end(), late_closings.begin(), late_closings.end());

    Json out = Json::array();
    for (int s = 0; s < kDialogueStageCount; ++s) {
        const auto& cands = by_stage[static_cast<std::size_t>(s)];
        if (cands.empty()) continue;
        const std::size_t pool = std::min<std::size_t>(3, cands.size());
        out.push_back(cands[(seed + static_cast<std::uint64_t>(s)) % pool]);
        if (s == 2 && !steering.empty()) {
            out.push_back(steering[seed % std::min<std::size_t>(3, steering.size())]);
        }
    }
    return Json{{"dialogues", out}};
}

}  // namespace

std::string MockExtractor::classify_objection(std::string_view u) {
    struct Entry {
        const char* label;
        std::initializer_list<std::string_view> cues;
    };
    static const Entry kTaxonomy[] = {
        {"The price is too expensive", {"expensive", "too much", "price", "budget", "cost"}},
        {"I am busy right now", {"busy", "call back", "no time", "do not have time"}},
        {"I need to think about it", {"think about it", "consider"}},
        {"I do not want a long contract", {"contract", "locked"}},
        {"My current internet is good enough", {"good enough", "already fine"}},
        {"I already have another provider", {"another provider", "current provider"}},
        {"I am not interested", {"not interested"}},
    };
    for (const auto& e : kTaxonomy) {
        if (any_word(u, e.cues)) {
            return e.label;
        }
    }
    return {};
}

std::string MockExtractor::complete(std::string_view instruction, std::span<const CallRecord> transcripts) {
    const Instruction ins = parse_instruction(instruction);
    if (transcripts.empty()) {
        throw AdapterError("mock extractor: no transcripts supplied", false);
    }
    if (ins.task == "job_description") return job_description(transcripts).dump();
    if (ins.task == "knowledge") {
        if (ins.topic.empty()) throw AdapterError("mock extractor: knowledge task without TOPIC", false);
        return knowledge(ins.topic, transcripts).dump();
    }
    if (ins.task == "example_dialogues") return dialogues(transcripts, seed_).dump();
    throw AdapterError("mock extractor: unknown task '" + ins.task + "'", false);
}

ExternalModelConfig ExternalModelConfig::from_env() {
    ExternalModelConfig c;
    if (const char* url = std::getenv("VC_UPSTREAM_URL")) c.url = url;
    if (const char* key = std::getenv("VC_UPSTREAM_KEY")) c.api_key = key;
    return c;
}

std::string ExternalTextModel::complete(std::string_view, std::span<const CallRecord>) {
    if (!config_.configured()) {
        throw AdapterError("external model not configured", true,
                           "set VC_UPSTREAM_URL and VC_UPSTREAM_KEY");
    }
    throw AdapterError("external model connector is configuration-only in this build", true,
                       "endpoint " + config_.url);
}

std::unique_ptr<TextModelAdapter> make_text_model(std::string_view kind, std::uint64_t seed) {
    if (kind == "mock") return std::make_unique<MockExtractor>(seed);
    if (kind == "external") return std::make_unique<ExternalTextModel>(ExternalModelConfig::from_env());
    throw ValidationError("unknown text model adapter '" + std::string(kind) + "'");
}

}  // namespace voiceclone
