#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace anaquest::model {

struct LearningObjective {
    std::string id;
    std::string text;  // non-empty
};

// A topic is one tested theme slice; distinct topics may share a theme.
struct Topic {
    std::string id;
    std::string theme;
    std::string title;  // the [topic] slot in the stem; non-empty
    LearningObjective objective;
};

enum class Source { Human, AnaQuest, Baseline };

std::string to_string(Source s);
Source source_from_string(const std::string& s);  // throws on unknown

struct Assertion {
    char label;        // 'A', 'B' or 'C' once placed in a question
    std::string text;  // sentence, ~30 words guideline
    bool truth;        // immutable after creation
};

// Exam question: a stem derived from the topic title plus exactly three
// labeled assertions, at least one true and at least one false.
struct AnalyticalQuestion {
    std::string id;
    Topic topic;
    Source source = Source::Human;
    std::vector<Assertion> assertions;

    std::string stem() const;
};

// One of the 8 subsets of {A,B,C} or "I do not know"; 9 options total.
class AnswerOption {
public:
    static AnswerOption subset_of(std::uint8_t mask);  // bit 0=A, 1=B, 2=C
    static AnswerOption subset_of_labels(const std::string& labels);
    static AnswerOption i_dont_know();

    bool is_idk() const { return idk_; }
    std::uint8_t mask() const { return mask_; }
    bool contains(char label) const;
    int size() const;

    // Wire codes: NONE, A, B, C, AB, AC, BC, ABC, IDK.
    std::string code() const;
    static AnswerOption from_code(const std::string& code);  // throws on unknown

    bool operator==(const AnswerOption& o) const { return idk_ == o.idk_ && mask_ == o.mask_; }
    bool operator!=(const AnswerOption& o) const { return !(*this == o); }

private:
    AnswerOption(bool idk, std::uint8_t mask) : idk_(idk), mask_(mask) {}
    bool idk_ = false;
    std::uint8_t mask_ = 0;
};

// All 9 options in canonical order: subsets by size then lexicographic
// (NONE, A, B, C, AB, AC, BC, ABC), IDK last. Response files are
// position-independent but this order is what renders and enumerates.
std::vector<AnswerOption> enumerate_options(const AnalyticalQuestion& q);

// The subset of labels whose assertions are true.
AnswerOption correct_option(const AnalyticalQuestion& q);

// Empty iff all invariants hold; each entry names the failed invariant.
std::vector<std::string> validate_question(const AnalyticalQuestion& q);

// Corpus (de)serialization. Serialization is canonical (questions sorted
// by id, assertions by label, 2-space indent, trailing newline), so
// serialize(parse(serialize(x))) is byte-identical.
nlohmann::json question_to_json(const AnalyticalQuestion& q);
AnalyticalQuestion question_from_json(const nlohmann::json& j);  // throws on schema violations
std::string serialize_corpus(std::vector<AnalyticalQuestion> questions);
std::vector<AnalyticalQuestion> parse_corpus(const std::string& text);
std::vector<AnalyticalQuestion> load_corpus(const std::string& path);

nlohmann::json topic_to_json(const Topic& t);
Topic topic_from_json(const nlohmann::json& j);

}  // namespace anaquest::model
