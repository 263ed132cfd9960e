#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "anaquest/model.hpp"
#include "anaquest/rational.hpp"

namespace anaquest::survey {

struct SurveyRating {
    std::string rater_id;
    std::string question_id;
    std::string criterion;  // S1..S5
    int rating = 0;         // 1..5
};

struct Criterion {
    std::string code;
    std::string name;
    std::string text;
};

// The five rating criteria with their prompt texts.
const std::array<Criterion, 5>& criterion_catalog();
bool is_known_criterion(const std::string& code);

struct CellAggregate {
    Rational sum;  // exact until final decimal rendering
    int count = 0;

    double mean() const { return sum.as_double() / count; }
};

using AggregateTable = std::map<std::pair<model::Source, std::string>, CellAggregate>;

// Mean rating per (source, criterion) cell; cells with no ratings are
// simply absent, never zero-filled.
AggregateTable aggregate_ratings(const std::vector<SurveyRating>& ratings,
                                 const std::map<std::string, model::Source>& source_of_question);

// Ratings file: CSV rater_id,question_id,criterion,rating.
std::vector<SurveyRating> read_ratings_csv(const std::string& path);

// Wide matrices sources x criteria; missing cells are left empty.
std::string format_means_csv(const AggregateTable& table);
std::string format_counts_csv(const AggregateTable& table);

}  // namespace anaquest::survey
