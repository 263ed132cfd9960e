#include "anaquest/exam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "anaquest/csv.hpp"
#include "anaquest/rng.hpp"
#include "anaquest/stats.hpp"

namespace anaquest::exam {

using model::AnalyticalQuestion;
using model::AnswerOption;
using nlohmann::json;

namespace {

// topic id -> question, enforcing one question per topic in a pool
std::map<std::string, AnalyticalQuestion> by_topic(const std::vector<AnalyticalQuestion>& pool,
                                                   const char* pool_name) {
    std::map<std::string, AnalyticalQuestion> m;
    for (const auto& q : pool) {
        if (!m.emplace(q.topic.id, q).second)
            throw std::invalid_argument(std::string("assemble_versions: ") + pool_name +
                                        " has two questions for topic '" + q.topic.id + "'");
    }
    return m;
}

// alternate human and AI questions; leftovers appended
std::vector<AnalyticalQuestion> interleave(const std::vector<AnalyticalQuestion>& human,
                                           const std::vector<AnalyticalQuestion>& ai) {
    std::vector<AnalyticalQuestion> out;
    out.reserve(human.size() + ai.size());
    std::size_t i = 0, j = 0;
    while (i < human.size() || j < ai.size()) {
        if (i < human.size()) out.push_back(human[i++]);
        if (j < ai.size()) out.push_back(ai[j++]);
    }
    return out;
}

}  // namespace

std::pair<ExamVersion, ExamVersion> assemble_versions(
    const std::vector<AnalyticalQuestion>& human, const std::vector<AnalyticalQuestion>& pool_x,
    const std::vector<AnalyticalQuestion>& pool_y, int k, std::uint64_t seed) {
    if (k < 0) throw std::invalid_argument("assemble_versions: k must be >= 0");

    auto x_by_topic = by_topic(pool_x, "pool_x");
    auto y_by_topic = by_topic(pool_y, "pool_y");

    std::vector<std::string> topics;
    for (const auto& [tid, q] : x_by_topic) {
        if (!y_by_topic.count(tid))
            throw std::invalid_argument("assemble_versions: topic '" + tid +
                                        "' present in pool_x but not pool_y");
        topics.push_back(tid);
    }
    for (const auto& [tid, q] : y_by_topic) {
        if (!x_by_topic.count(tid))
            throw std::invalid_argument("assemble_versions: topic '" + tid +
                                        "' present in pool_y but not pool_x");
    }
    if (static_cast<int>(topics.size()) < 2 * k)
        throw std::invalid_argument("assemble_versions: need >= " + std::to_string(2 * k) +
                                    " shared topics, have " + std::to_string(topics.size()));

    std::set<std::string> ai_topics(topics.begin(), topics.end());
    for (const auto& q : human) {
        if (ai_topics.count(q.topic.id))
            throw std::invalid_argument("assemble_versions: human question '" + q.id +
                                        "' duplicates AI topic '" + q.topic.id + "'");
    }

    // canonical human order, invariant to input order
    auto human_sorted = human;
    std::sort(human_sorted.begin(), human_sorted.end(),
              [](const AnalyticalQuestion& a, const AnalyticalQuestion& b) { return a.id < b.id; });

    // seeded Fisher-Yates over the sorted topic ids, take the first 2k
    Rng rng(seed);
    for (std::size_t i = topics.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(topics[i - 1], topics[j]);
    }

    std::vector<AnalyticalQuestion> ai_a, ai_b;
    for (int i = 0; i < 2 * k; ++i) {
        const auto& tid = topics[static_cast<std::size_t>(i)];
        const bool x_in_a = i < k;
        ai_a.push_back(x_in_a ? x_by_topic.at(tid) : y_by_topic.at(tid));
        ai_b.push_back(x_in_a ? y_by_topic.at(tid) : x_by_topic.at(tid));
    }

    ExamVersion va{'A', interleave(human_sorted, ai_a)};
    ExamVersion vb{'B', interleave(human_sorted, ai_b)};
    return {va, vb};
}

Rational score_response(const AnalyticalQuestion& q, const AnswerOption& choice) {
    if (choice.is_idk()) return Rational(0);
    if (choice == model::correct_option(q)) return Rational(1);
    return Rational(-1, 7);
}

ScoredExam score_student(const std::map<std::string, AnalyticalQuestion>& questions_by_id,
                         const std::string& student_id,
                         const std::vector<ResponseRecord>& records) {
    ScoredExam out;
    out.student_id = student_id;
    int n = 0, n_correct = 0;
    for (const auto& r : records) {
        if (r.student_id != student_id) continue;
        const auto it = questions_by_id.find(r.question_id);
        if (it == questions_by_id.end())
            throw std::runtime_error("score_student: unknown question id '" + r.question_id + "'");
        const Rational s = score_response(it->second, r.choice);
        out.per_question.emplace_back(r.question_id, s);
        out.total += s;
        ++n;
        if (!r.choice.is_idk() && r.choice == model::correct_option(it->second)) ++n_correct;
    }
    if (n == 0) throw std::invalid_argument("score_student: no records for '" + student_id + "'");
    out.correctness_ratio = static_cast<double>(n_correct) / static_cast<double>(n);
    return out;
}

double correctness_ratio(const std::map<std::string, AnalyticalQuestion>& questions_by_id,
                         const std::vector<ResponseRecord>& records) {
    if (records.empty()) throw std::invalid_argument("correctness_ratio: no records");
    int n = 0, n_correct = 0;
    for (const auto& r : records) {
        const auto it = questions_by_id.find(r.question_id);
        if (it == questions_by_id.end())
            throw std::runtime_error("correctness_ratio: unknown question id '" + r.question_id +
                                     "'");
        ++n;
        if (!r.choice.is_idk() && r.choice == model::correct_option(it->second)) ++n_correct;
    }
    return static_cast<double>(n_correct) / static_cast<double>(n);
}

TTestResult version_equivalence_test(const std::vector<double>& ratios_a,
                                     const std::vector<double>& ratios_b) {
    const std::size_t na = ratios_a.size(), nb = ratios_b.size();
    if (na < 2 || nb < 2)
        throw std::invalid_argument("version_equivalence_test: each group needs >= 2 entries");

    TTestResult res;
    res.df = static_cast<int>(na + nb) - 2;
    const double ma = stats::mean(ratios_a), mb = stats::mean(ratios_b);
    const double sa = stats::sample_sd(ratios_a), sb = stats::sample_sd(ratios_b);
    const double sp2 = ((static_cast<double>(na) - 1) * sa * sa +
                        (static_cast<double>(nb) - 1) * sb * sb) /
                       static_cast<double>(res.df);
    if (sp2 == 0) {
        if (ma == mb) {
            res.t = 0;
            res.p = 1;
        } else {
            res.degenerate = true;
            res.t = std::numeric_limits<double>::infinity() * (ma > mb ? 1 : -1);
            res.p = 0;
        }
        return res;
    }
    res.t = (ma - mb) / std::sqrt(sp2 * (1.0 / static_cast<double>(na) +
                                         1.0 / static_cast<double>(nb)));
    res.p = stats::student_t_two_sided_p(res.t, static_cast<double>(res.df));
    return res;
}

std::vector<ResponseRecord> read_responses_csv(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    const int c_student = t.require_column("student_id");
    const int c_version = t.require_column("version");
    const int c_question = t.require_column("question_id");
    const int c_choice = t.require_column("choice");

    std::vector<ResponseRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        ResponseRecord rec;
        rec.student_id = t.cell(r, c_student);
        const std::string& v = t.cell(r, c_version);
        if (v != "A" && v != "B")
            throw std::runtime_error(path + ":" + std::to_string(t.line_of_row(r)) +
                                     ": column 'version': expected A or B, got '" + v + "'");
        rec.version_id = v[0];
        rec.question_id = t.cell(r, c_question);
        try {
            rec.choice = AnswerOption::from_code(t.cell(r, c_choice));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(t.line_of_row(r)) +
                                     ": column 'choice': " + e.what());
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::string format_responses_csv(const std::vector<ResponseRecord>& records) {
    std::string out = "student_id,version,question_id,choice\n";
    for (const auto& r : records) {
        out += csv::format_row(
            {r.student_id, std::string(1, r.version_id), r.question_id, r.choice.code()});
    }
    return out;
}

json exam_export_json(const std::vector<ExamVersion>& versions) {
    json out = json::array();
    for (const auto& v : versions) {
        json questions = json::array();
        for (const auto& q : v.questions) {
            json assertions = json::array();
            auto sorted = q.assertions;
            std::sort(sorted.begin(), sorted.end(),
                      [](const model::Assertion& a, const model::Assertion& b) {
                          return a.label < b.label;
                      });
            for (const auto& a : sorted)
                assertions.push_back(json{{"label", std::string(1, a.label)}, {"text", a.text}});
            json options = json::array();
            for (const auto& opt : model::enumerate_options(q)) options.push_back(opt.code());
            questions.push_back(json{{"id", q.id},
                                     {"stem", q.stem()},
                                     {"assertions", assertions},
                                     {"options", options}});
        }
        out.push_back(json{{"version", std::string(1, v.version_id)}, {"questions", questions}});
    }
    return out;
}

json versions_to_json(const std::vector<ExamVersion>& versions) {
    json out = json::array();
    for (const auto& v : versions) {
        json ids = json::array();
        for (const auto& q : v.questions) ids.push_back(q.id);
        out.push_back(json{{"version", std::string(1, v.version_id)}, {"question_ids", ids}});
    }
    return out;
}

std::string format_score_report(const std::vector<ScoredExam>& scored) {
    std::string out = "student_id,total_score,correctness_ratio\n";
    for (const auto& s : scored) {
        out += csv::format_row(
            {s.student_id, s.total.to_string(), csv::format_double(s.correctness_ratio)});
    }
    return out;
}

}  // namespace anaquest::exam
