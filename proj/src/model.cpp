#include "anaquest/model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace anaquest::model {

using nlohmann::json;

std::string to_string(Source s) {
    switch (s) {
        case Source::Human: return "Human";
        case Source::AnaQuest: return "AnaQuest";
        case Source::Baseline: return "Baseline";
    }
    throw std::logic_error("unreachable Source");
}

Source source_from_string(const std::string& s) {
    if (s == "Human") return Source::Human;
    if (s == "AnaQuest") return Source::AnaQuest;
    if (s == "Baseline") return Source::Baseline;
    throw std::runtime_error("unknown source '" + s + "' (expected Human, AnaQuest or Baseline)");
}

std::string AnalyticalQuestion::stem() const {
    return "Which of the following are correct about " + topic.title + "?";
}

AnswerOption AnswerOption::subset_of(std::uint8_t mask) {
    if (mask > 0b111) throw std::invalid_argument("AnswerOption: mask out of range");
    return AnswerOption(false, mask);
}

AnswerOption AnswerOption::subset_of_labels(const std::string& labels) {
    std::uint8_t mask = 0;
    for (char c : labels) {
        if (c < 'A' || c > 'C') throw std::invalid_argument("AnswerOption: bad label");
        mask |= static_cast<std::uint8_t>(1u << (c - 'A'));
    }
    return AnswerOption(false, mask);
}

AnswerOption AnswerOption::i_dont_know() { return AnswerOption(true, 0); }

bool AnswerOption::contains(char label) const {
    if (idk_ || label < 'A' || label > 'C') return false;
    return (mask_ >> (label - 'A')) & 1u;
}

int AnswerOption::size() const {
    int n = 0;
    for (int b = 0; b < 3; ++b) n += (mask_ >> b) & 1u;
    return n;
}

std::string AnswerOption::code() const {
    if (idk_) return "IDK";
    if (mask_ == 0) return "NONE";
    std::string s;
    for (int b = 0; b < 3; ++b) {
        if ((mask_ >> b) & 1u) s.push_back(static_cast<char>('A' + b));
    }
    return s;
}

AnswerOption AnswerOption::from_code(const std::string& code) {
    if (code == "IDK") return i_dont_know();
    if (code == "NONE") return subset_of(0);
    static const char* valid[] = {"A", "B", "C", "AB", "AC", "BC", "ABC"};
    for (const char* v : valid) {
        if (code == v) return subset_of_labels(code);
    }
    throw std::runtime_error("unknown answer option code '" + code + "'");
}

std::vector<AnswerOption> enumerate_options(const AnalyticalQuestion& q) {
    if (!validate_question(q).empty())
        throw std::invalid_argument("enumerate_options: invalid question " + q.id);
    // size-then-lexicographic subset order, IDK last
    static const std::uint8_t order[8] = {0b000, 0b001, 0b010, 0b100,
                                          0b011, 0b101, 0b110, 0b111};
    std::vector<AnswerOption> out;
    out.reserve(9);
    for (std::uint8_t m : order) out.push_back(AnswerOption::subset_of(m));
    out.push_back(AnswerOption::i_dont_know());
    return out;
}

AnswerOption correct_option(const AnalyticalQuestion& q) {
    if (!validate_question(q).empty())
        throw std::invalid_argument("correct_option: invalid question " + q.id);
    std::uint8_t mask = 0;
    for (const auto& a : q.assertions) {
        if (a.truth) mask |= static_cast<std::uint8_t>(1u << (a.label - 'A'));
    }
    return AnswerOption::subset_of(mask);
}

std::vector<std::string> validate_question(const AnalyticalQuestion& q) {
    std::vector<std::string> violations;
    if (q.id.empty()) violations.push_back("empty question id");
    if (q.topic.title.empty()) violations.push_back("empty topic title");
    if (q.topic.objective.text.empty()) violations.push_back("empty learning objective text");
    if (q.assertions.size() != 3) {
        violations.push_back("assertion count != 3");
        return violations;  // label/truth checks assume 3 assertions
    }
    bool labels_ok = true;
    std::uint8_t seen = 0;
    for (const auto& a : q.assertions) {
        if (a.label < 'A' || a.label > 'C') { labels_ok = false; break; }
        const std::uint8_t bit = static_cast<std::uint8_t>(1u << (a.label - 'A'));
        if (seen & bit) { labels_ok = false; break; }
        seen |= bit;
    }
    if (!labels_ok || seen != 0b111) violations.push_back("labels are not exactly A, B, C");
    for (const auto& a : q.assertions) {
        if (a.text.empty()) {
            violations.push_back("empty assertion text");
            break;
        }
    }
    const bool any_true = std::any_of(q.assertions.begin(), q.assertions.end(),
                                      [](const Assertion& a) { return a.truth; });
    const bool any_false = std::any_of(q.assertions.begin(), q.assertions.end(),
                                       [](const Assertion& a) { return !a.truth; });
    if (!any_true) violations.push_back("no correct assertion");
    if (!any_false) violations.push_back("no incorrect assertion");
    return violations;
}

json topic_to_json(const Topic& t) {
    return json{{"id", t.id},
                {"theme", t.theme},
                {"title", t.title},
                {"objective", json{{"id", t.objective.id}, {"text", t.objective.text}}}};
}

Topic topic_from_json(const json& j) {
    Topic t;
    t.id = j.at("id").get<std::string>();
    t.theme = j.value("theme", "");
    t.title = j.at("title").get<std::string>();
    const auto& obj = j.at("objective");
    t.objective.id = obj.value("id", "");
    t.objective.text = obj.at("text").get<std::string>();
    if (t.title.empty()) throw std::runtime_error("topic " + t.id + ": empty title");
    if (t.objective.text.empty())
        throw std::runtime_error("topic " + t.id + ": empty objective text");
    return t;
}

json question_to_json(const AnalyticalQuestion& q) {
    json assertions = json::array();
    auto sorted = q.assertions;
    std::sort(sorted.begin(), sorted.end(),
              [](const Assertion& a, const Assertion& b) { return a.label < b.label; });
    for (const auto& a : sorted) {
        assertions.push_back(json{{"label", std::string(1, a.label)},
                                  {"text", a.text},
                                  {"truth", a.truth}});
    }
    return json{{"id", q.id},
                {"topic", topic_to_json(q.topic)},
                {"source", to_string(q.source)},
                {"assertions", assertions}};
}

AnalyticalQuestion question_from_json(const json& j) {
    AnalyticalQuestion q;
    q.id = j.at("id").get<std::string>();
    q.topic = topic_from_json(j.at("topic"));
    q.source = source_from_string(j.at("source").get<std::string>());
    for (const auto& aj : j.at("assertions")) {
        const std::string label = aj.at("label").get<std::string>();
        if (label.size() != 1)
            throw std::runtime_error("question " + q.id + ": bad assertion label '" + label + "'");
        q.assertions.push_back(Assertion{label[0], aj.at("text").get<std::string>(),
                                         aj.at("truth").get<bool>()});
    }
    const auto violations = validate_question(q);
    if (!violations.empty()) {
        std::string msg = "question " + q.id + " invalid:";
        for (const auto& v : violations) msg += " [" + v + "]";
        throw std::runtime_error(msg);
    }
    return q;
}

std::string serialize_corpus(std::vector<AnalyticalQuestion> questions) {
    std::sort(questions.begin(), questions.end(),
              [](const AnalyticalQuestion& a, const AnalyticalQuestion& b) { return a.id < b.id; });
    json arr = json::array();
    for (const auto& q : questions) arr.push_back(question_to_json(q));
    return arr.dump(2) + "\n";
}

std::vector<AnalyticalQuestion> parse_corpus(const std::string& text) {
    const json arr = json::parse(text);
    if (!arr.is_array()) throw std::runtime_error("corpus: expected a JSON array");
    std::vector<AnalyticalQuestion> out;
    out.reserve(arr.size());
    for (const auto& j : arr) out.push_back(question_from_json(j));
    return out;
}

std::vector<AnalyticalQuestion> load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_corpus(buf.str());
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

}  // namespace anaquest::model
