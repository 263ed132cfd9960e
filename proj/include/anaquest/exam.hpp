#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "anaquest/model.hpp"
#include "anaquest/rational.hpp"

namespace anaquest::exam {

struct ExamVersion {
    char version_id;  // 'A' or 'B'
    std::vector<model::AnalyticalQuestion> questions;
};

struct ResponseRecord {
    std::string student_id;
    char version_id;
    std::string question_id;
    model::AnswerOption choice = model::AnswerOption::subset_of(0);
};

// Builds the two counterbalanced versions: both carry every human question;
// 2k AI topics are chosen by seeded shuffle of the sorted topic ids, the
// first k served from source X in version A (Y in B) and the next k from Y
// in A (X in B). Question order within a version interleaves human and AI
// questions deterministically.
std::pair<ExamVersion, ExamVersion> assemble_versions(
    const std::vector<model::AnalyticalQuestion>& human,
    const std::vector<model::AnalyticalQuestion>& pool_x,
    const std::vector<model::AnalyticalQuestion>& pool_y, int k, std::uint64_t seed);

// +1 exact match, 0 for IDK, -1/7 otherwise. Exact rational arithmetic.
Rational score_response(const model::AnalyticalQuestion& q, const model::AnswerOption& choice);

struct ScoredExam {
    std::string student_id;
    std::vector<std::pair<std::string, Rational>> per_question;  // (question_id, score)
    Rational total;
    double correctness_ratio = 0;  // exact-match fraction over answered records
};

// "Correct" for the ratio (and IRT dichotomization downstream) means exact
// subset match; IDK is a scorable non-correct response.
ScoredExam score_student(const std::map<std::string, model::AnalyticalQuestion>& questions_by_id,
                         const std::string& student_id,
                         const std::vector<ResponseRecord>& records);

double correctness_ratio(const std::map<std::string, model::AnalyticalQuestion>& questions_by_id,
                         const std::vector<ResponseRecord>& records);

struct TTestResult {
    double t = 0;
    int df = 0;
    double p = 1;
    bool degenerate = false;  // zero pooled variance with unequal means
};

// Pooled-variance two-sample Student t-test, df = n_a + n_b - 2.
TTestResult version_equivalence_test(const std::vector<double>& ratios_a,
                                     const std::vector<double>& ratios_b);

// Response file: CSV student_id,version,question_id,choice with choice in
// {NONE,A,B,C,AB,AC,BC,ABC,IDK}.
std::vector<ResponseRecord> read_responses_csv(const std::string& path);
std::string format_responses_csv(const std::vector<ResponseRecord>& records);

// Student-facing export: stems and assertion texts only, never truth flags.
nlohmann::json exam_export_json(const std::vector<ExamVersion>& versions);

// Internal versions file: question ids per version.
nlohmann::json versions_to_json(const std::vector<ExamVersion>& versions);

// Score report CSV: student_id,total_score,correctness_ratio with the total
// rendered as an exact rational.
std::string format_score_report(const std::vector<ScoredExam>& scored);

}  // namespace anaquest::exam
