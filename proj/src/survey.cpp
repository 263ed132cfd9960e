#include "anaquest/survey.hpp"

#include <stdexcept>

#include "anaquest/csv.hpp"

namespace anaquest::survey {

const std::array<Criterion, 5>& criterion_catalog() {
    static const std::array<Criterion, 5> catalog = {{
        {"S1", "Answerability", "The question is clear enough to answer."},
        {"S2", "Correctness", "The given answers are correct."},
        {"S3", "Adequate Complexity",
         "The given answers are adequate, i.e., not too easy, not too difficult, not too "
         "confusing, etc."},
        {"S4", "Alignment", "The question is suitable for the learning objective."},
        {"S5", "Adoptability", "I would adopt the question to my course."},
    }};
    return catalog;
}

bool is_known_criterion(const std::string& code) {
    for (const auto& c : criterion_catalog()) {
        if (c.code == code) return true;
    }
    return false;
}

AggregateTable aggregate_ratings(const std::vector<SurveyRating>& ratings,
                                 const std::map<std::string, model::Source>& source_of_question) {
    AggregateTable table;
    for (const auto& r : ratings) {
        if (r.rating < 1 || r.rating > 5)
            throw std::invalid_argument("rating " + std::to_string(r.rating) + " for question '" +
                                        r.question_id + "' outside 1..5");
        if (!is_known_criterion(r.criterion))
            throw std::invalid_argument("unknown criterion '" + r.criterion + "'");
        const auto it = source_of_question.find(r.question_id);
        if (it == source_of_question.end())
            throw std::invalid_argument("rating references unknown question '" + r.question_id +
                                        "'");
        auto& cell = table[{it->second, r.criterion}];
        cell.sum += Rational(r.rating);
        cell.count += 1;
    }
    return table;
}

std::vector<SurveyRating> read_ratings_csv(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    const int c_rater = t.require_column("rater_id");
    const int c_question = t.require_column("question_id");
    const int c_criterion = t.require_column("criterion");
    const int c_rating = t.require_column("rating");

    std::vector<SurveyRating> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        SurveyRating rating;
        rating.rater_id = t.cell(r, c_rater);
        rating.question_id = t.cell(r, c_question);
        rating.criterion = t.cell(r, c_criterion);
        rating.rating = t.cell_int(r, c_rating);
        if (rating.rating < 1 || rating.rating > 5)
            throw std::runtime_error(path + ":" + std::to_string(t.line_of_row(r)) +
                                     ": column 'rating': value " +
                                     std::to_string(rating.rating) + " outside 1..5");
        if (!is_known_criterion(rating.criterion))
            throw std::runtime_error(path + ":" + std::to_string(t.line_of_row(r)) +
                                     ": column 'criterion': unknown code '" + rating.criterion +
                                     "'");
        out.push_back(std::move(rating));
    }
    return out;
}

namespace {

std::string format_matrix(const AggregateTable& table, bool counts) {
    static const model::Source sources[] = {model::Source::Human, model::Source::AnaQuest,
                                            model::Source::Baseline};
    std::string out = "source";
    for (const auto& c : criterion_catalog()) out += "," + c.code;
    out += "\n";
    for (const auto source : sources) {
        bool any = false;
        for (const auto& c : criterion_catalog()) {
            if (table.count({source, c.code})) any = true;
        }
        if (!any) continue;
        std::vector<std::string> row{model::to_string(source)};
        for (const auto& c : criterion_catalog()) {
            const auto it = table.find({source, c.code});
            if (it == table.end()) {
                row.push_back("");
            } else if (counts) {
                row.push_back(std::to_string(it->second.count));
            } else {
                row.push_back(csv::format_double(it->second.mean()));
            }
        }
        out += csv::format_row(row);
    }
    return out;
}

}  // namespace

std::string format_means_csv(const AggregateTable& table) { return format_matrix(table, false); }

std::string format_counts_csv(const AggregateTable& table) { return format_matrix(table, true); }

}  // namespace anaquest::survey
