#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "anaquest/exam.hpp"
#include "anaquest/manifest.hpp"
#include "anaquest/stats.hpp"
#include "test_helpers.hpp"

using namespace anaquest;
using test_helpers::make_question;

namespace {

std::vector<model::AnalyticalQuestion> make_pool(model::Source source, int n_topics,
                                                 const std::string& topic_prefix) {
    std::vector<model::AnalyticalQuestion> pool;
    for (int i = 0; i < n_topics; ++i) {
        char tid[16];
        std::snprintf(tid, sizeof(tid), "%s%02d", topic_prefix.c_str(), i + 1);
        pool.push_back(make_question(model::to_string(source) + "-" + tid, tid, source, "TFF"));
    }
    return pool;
}

}  // namespace

TEST_CASE("rational arithmetic stays normalized and exact") {
    Rational r(-2, -14);
    CHECK(r == Rational(1, 7));
    CHECK(r.to_string() == "1/7");
    CHECK(Rational(3).to_string() == "3");
    CHECK((Rational(1) + Rational(-1, 7) + Rational(-1, 7)).to_string() == "5/7");
    CHECK_THROWS(Rational(1, 0));

    Rational sum;
    for (int i = 0; i < 7; ++i) sum += Rational(-1, 7);
    CHECK(sum == Rational(-1));
}

TEST_CASE("assemble_versions reproduces the 8 human + 5/5 structure") {
    const auto human = make_pool(model::Source::Human, 8, "h");
    const auto anaquest = make_pool(model::Source::AnaQuest, 16, "t");
    const auto baseline = make_pool(model::Source::Baseline, 16, "t");

    const auto [va, vb] = exam::assemble_versions(human, anaquest, baseline, 5, 42);
    CHECK(va.version_id == 'A');
    CHECK(vb.version_id == 'B');
    CHECK(va.questions.size() == 18);
    CHECK(vb.questions.size() == 18);

    const auto ids_of = [](const exam::ExamVersion& v, model::Source s) {
        std::set<std::string> ids;
        for (const auto& q : v.questions)
            if (q.source == s) ids.insert(q.id);
        return ids;
    };
    CHECK(ids_of(va, model::Source::Human) == ids_of(vb, model::Source::Human));
    CHECK(ids_of(va, model::Source::Human).size() == 8);
    CHECK(ids_of(va, model::Source::AnaQuest).size() == 5);
    CHECK(ids_of(va, model::Source::Baseline).size() == 5);

    // counterbalance: every AI topic appears in both versions with the source swapped
    std::map<std::string, model::Source> a_source, b_source;
    for (const auto& q : va.questions)
        if (q.source != model::Source::Human) a_source[q.topic.id] = q.source;
    for (const auto& q : vb.questions)
        if (q.source != model::Source::Human) b_source[q.topic.id] = q.source;
    CHECK(a_source.size() == 10);
    REQUIRE(a_source.size() == b_source.size());
    for (const auto& [tid, source] : a_source) {
        REQUIRE(b_source.count(tid) == 1);
        CHECK(b_source.at(tid) != source);
    }
}

TEST_CASE("assemble_versions with k = 0 degenerates to the human set") {
    const auto human = make_pool(model::Source::Human, 3, "h");
    const auto [va, vb] = exam::assemble_versions(human, {}, {}, 0, 7);
    CHECK(va.questions.size() == 3);
    CHECK(vb.questions.size() == 3);
    for (std::size_t i = 0; i < va.questions.size(); ++i)
        CHECK(va.questions[i].id == vb.questions[i].id);
}

TEST_CASE("assemble_versions is seed-deterministic and input-order invariant") {
    auto human = make_pool(model::Source::Human, 4, "h");
    auto ax = make_pool(model::Source::AnaQuest, 8, "t");
    auto by = make_pool(model::Source::Baseline, 8, "t");

    const auto [va1, vb1] = exam::assemble_versions(human, ax, by, 3, 99);

    std::reverse(human.begin(), human.end());
    std::reverse(ax.begin(), ax.end());
    std::reverse(by.begin(), by.end());
    const auto [va2, vb2] = exam::assemble_versions(human, ax, by, 3, 99);

    REQUIRE(va1.questions.size() == va2.questions.size());
    for (std::size_t i = 0; i < va1.questions.size(); ++i)
        CHECK(va1.questions[i].id == va2.questions[i].id);

    const auto [va3, vb3] = exam::assemble_versions(human, ax, by, 3, 100);
    bool any_diff = false;
    for (std::size_t i = 0; i < va1.questions.size(); ++i)
        any_diff = any_diff || va1.questions[i].id != va3.questions[i].id;
    CHECK(any_diff);  // different seed reshuffles topic selection
}

TEST_CASE("assemble_versions rejects malformed inputs") {
    const auto human = make_pool(model::Source::Human, 2, "h");
    const auto ax = make_pool(model::Source::AnaQuest, 4, "t");
    auto by = make_pool(model::Source::Baseline, 4, "t");

    CHECK_THROWS_WITH_AS(exam::assemble_versions(human, ax, by, 3, 1),
                         doctest::Contains("shared topics"), std::invalid_argument);

    by.pop_back();
    CHECK_THROWS_AS(exam::assemble_versions(human, ax, by, 1, 1), std::invalid_argument);

    const auto clash = make_pool(model::Source::Human, 1, "t");
    const auto by_full = make_pool(model::Source::Baseline, 4, "t");
    CHECK_THROWS_WITH_AS(exam::assemble_versions(clash, ax, by_full, 1, 1),
                         doctest::Contains("duplicates AI topic"), std::invalid_argument);
}

TEST_CASE("score_response follows the +1 / 0 / -1/7 policy") {
    const auto q = make_question("q", "t", model::Source::Human, "TFT");
    CHECK(exam::score_response(q, model::AnswerOption::from_code("AC")) == Rational(1));
    CHECK(exam::score_response(q, model::AnswerOption::i_dont_know()) == Rational(0));
    CHECK(exam::score_response(q, model::AnswerOption::from_code("A")) == Rational(-1, 7));
    CHECK(exam::score_response(q, model::AnswerOption::from_code("NONE")) == Rational(-1, 7));
}

TEST_CASE("uniform guessing over the 8 subsets is exactly score-neutral") {
    // enumerate all 8 subset options: one scores +1, seven score -1/7
    const auto q = make_question("q", "t", model::Source::AnaQuest, "FTF");
    Rational sum;
    int counted = 0;
    for (const auto& opt : model::enumerate_options(q)) {
        if (opt.is_idk()) continue;
        sum += exam::score_response(q, opt);
        ++counted;
    }
    CHECK(counted == 8);
    CHECK(sum == Rational(0));
}

TEST_CASE("m incorrect answers total exactly -m/7 plus correct points") {
    std::map<std::string, model::AnalyticalQuestion> questions;
    std::vector<exam::ResponseRecord> records;
    for (int i = 0; i < 12; ++i) {
        const std::string qid = "q" + std::to_string(i);
        questions.emplace(qid, make_question(qid, "t" + std::to_string(i), model::Source::Human,
                                             "TFF"));
        exam::ResponseRecord r;
        r.student_id = "s1";
        r.version_id = 'A';
        r.question_id = qid;
        if (i < 4) {
            r.choice = model::AnswerOption::from_code("A");  // correct
        } else if (i < 9) {
            r.choice = model::AnswerOption::from_code("BC");  // incorrect, m = 5
        } else {
            r.choice = model::AnswerOption::i_dont_know();
        }
        records.push_back(r);
    }
    const auto scored = exam::score_student(questions, "s1", records);
    CHECK(scored.total == Rational(4) + Rational(-5, 7));
    CHECK(scored.total.to_string() == "23/7");
    CHECK(scored.correctness_ratio == doctest::Approx(4.0 / 12.0));
}

TEST_CASE("correctness_ratio counts exact matches") {
    std::map<std::string, model::AnalyticalQuestion> questions;
    std::vector<exam::ResponseRecord> records;
    for (int i = 0; i < 18; ++i) {
        const std::string qid = "q" + std::to_string(i);
        questions.emplace(qid,
                          make_question(qid, "t" + std::to_string(i), model::Source::Human, "TTF"));
        exam::ResponseRecord r;
        r.student_id = "s1";
        r.version_id = 'A';
        r.question_id = qid;
        r.choice = i < 10 ? model::AnswerOption::from_code("AB")
                          : model::AnswerOption::from_code("C");
        records.push_back(r);
    }
    CHECK(exam::correctness_ratio(questions, records) == doctest::Approx(10.0 / 18.0));

    auto all_correct = records;
    for (auto& r : all_correct) r.choice = model::AnswerOption::from_code("AB");
    CHECK(exam::correctness_ratio(questions, all_correct) == 1.0);

    auto none_correct = records;
    for (auto& r : none_correct) r.choice = model::AnswerOption::from_code("A");
    CHECK(exam::correctness_ratio(questions, none_correct) == 0.0);

    CHECK_THROWS_AS(exam::correctness_ratio(questions, {}), std::invalid_argument);
}

TEST_CASE("t distribution tail matches frozen reference values") {
    // reference values computed with scipy.stats.t.sf
    CHECK(stats::student_t_two_sided_p(0.17, 55) == doctest::Approx(0.865633919637).epsilon(1e-9));
    CHECK(stats::student_t_two_sided_p(2.0, 10) == doctest::Approx(0.073388034771).epsilon(1e-9));
    CHECK(stats::student_t_two_sided_p(1.0, 30) == doctest::Approx(0.325308615426).epsilon(1e-9));
    CHECK(stats::student_t_two_sided_p(3.5, 8) == doctest::Approx(0.008079082260).epsilon(1e-9));
}

TEST_CASE("version_equivalence_test matches a frozen pooled t-test fixture") {
    const std::vector<double> a = {0.5, 0.6, 0.55, 0.62, 0.48};
    const std::vector<double> b = {0.40, 0.45, 0.38, 0.52};
    const auto res = exam::version_equivalence_test(a, b);
    CHECK(res.df == 7);
    CHECK(res.t == doctest::Approx(2.7269507922273677).epsilon(1e-12));
    CHECK(res.p == doctest::Approx(0.02946817909299996).epsilon(1e-9));
    CHECK_FALSE(res.degenerate);
}

TEST_CASE("version_equivalence_test symmetry and df") {
    const std::vector<double> same = {0.5, 0.6, 0.7, 0.4};
    const auto res = exam::version_equivalence_test(same, same);
    CHECK(res.t == 0.0);
    CHECK(res.p == 1.0);

    std::vector<double> a(29, 0.5), b(28, 0.5);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += (i % 2 ? 1e-3 : -1e-3);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += (i % 2 ? 1e-3 : -1e-3);
    CHECK(exam::version_equivalence_test(a, b).df == 55);
}

TEST_CASE("constant-shift samples with jitter are overwhelmingly significant") {
    std::vector<double> a = {-1e-6, 1e-6, -1e-6, 1e-6};
    std::vector<double> b = {1 - 1e-6, 1 + 1e-6, 1 - 1e-6, 1 + 1e-6};
    const auto res = exam::version_equivalence_test(a, b);
    CHECK(res.p < 0.001);
}

TEST_CASE("zero pooled variance with unequal means is flagged degenerate") {
    const auto res = exam::version_equivalence_test({0.5, 0.5}, {0.7, 0.7});
    CHECK(res.degenerate);

    CHECK_THROWS_AS(exam::version_equivalence_test({0.5}, {0.7, 0.7}), std::invalid_argument);
}

TEST_CASE("responses csv round-trips and rejects corrupt cells") {
    std::vector<exam::ResponseRecord> records;
    exam::ResponseRecord r;
    r.student_id = "s1";
    r.version_id = 'A';
    r.question_id = "q1";
    r.choice = model::AnswerOption::from_code("AB");
    records.push_back(r);
    r.student_id = "s2";
    r.version_id = 'B';
    r.choice = model::AnswerOption::i_dont_know();
    records.push_back(r);

    const auto dir = test_helpers::scratch_dir("responses_csv");
    const auto path = (dir / "responses.csv").string();
    atomic_write(path, exam::format_responses_csv(records));
    const auto back = exam::read_responses_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].choice.code() == "AB");
    CHECK(back[1].choice.is_idk());
    CHECK(back[1].version_id == 'B');

    atomic_write(path, "student_id,version,question_id,choice\ns1,A,q1,XYZ\n");
    CHECK_THROWS_WITH_AS(exam::read_responses_csv(path), doctest::Contains(":2"),
                         std::runtime_error);

    atomic_write(path, "student_id,version,question_id,choice\ns1,C,q1,AB\n");
    CHECK_THROWS_WITH_AS(exam::read_responses_csv(path), doctest::Contains("version"),
                         std::runtime_error);
}

TEST_CASE("exam export leaks no truth flags") {
    const auto human = make_pool(model::Source::Human, 2, "h");
    const auto ax = make_pool(model::Source::AnaQuest, 2, "t");
    const auto by = make_pool(model::Source::Baseline, 2, "t");
    const auto [va, vb] = exam::assemble_versions(human, ax, by, 1, 5);
    const auto dumped = exam::exam_export_json({va, vb}).dump(2);
    CHECK(dumped.find("truth") == std::string::npos);
    CHECK(dumped.find("Which of the following are correct about") != std::string::npos);
    CHECK(dumped.find("\"IDK\"") != std::string::npos);  // 9 options rendered
}

TEST_CASE("score report renders exact rationals") {
    exam::ScoredExam s;
    s.student_id = "s1";
    s.total = Rational(23, 7);
    s.correctness_ratio = 0.5;
    const auto csv_text = exam::format_score_report({s});
    CHECK(csv_text.find("s1,23/7,0.5") != std::string::npos);
}
