#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "anaquest/exam.hpp"
#include "anaquest/irt.hpp"
#include "anaquest/model.hpp"

namespace anaquest::sim {

struct CohortSpec {
    int n_students = 0;
    std::uint64_t seed = 0;
    double ability_mean = 0.0;
    double ability_sd = 1.0;
};

struct ItemSpec {
    std::string id;
    model::Source source = model::Source::Human;
    double alpha = 1.0;
    double beta = 0.0;
    std::string level = "question";  // question or foil
    std::string question_id;         // for foils: the owning question
};

// n i.i.d. ability draws; deterministic in (spec.seed).
std::vector<double> sample_abilities(const CohortSpec& spec);

// cell(j, i) ~ Bernoulli(icc(theta_j; alpha_i, beta_i)), one derived RNG
// substream per student so any parallel split reproduces the same matrix.
irt::ResponseMatrix simulate_binary_responses(const std::vector<double>& theta,
                                              const std::vector<ItemSpec>& items,
                                              std::uint64_t seed);

struct ExamScenario {
    CohortSpec cohort;
    std::vector<ItemSpec> items;
    double idk_prob = 0.0;
};

ExamScenario scenario_from_json(const nlohmann::json& j);
ExamScenario load_scenario(const std::string& path);
nlohmann::json scenario_to_json(const ExamScenario& scenario);

// Synthetic exam built from a scenario: each question-level item becomes a
// 3-assertion question whose foils are the foil items attached via
// question_id (1 or 2 per question); remaining assertions are correct.
struct SyntheticExam {
    std::vector<model::AnalyticalQuestion> questions;
    // (question_id + ":" + label) -> 2PL parameters of that assertion's
    // judgment curve: question params for correct assertions, own params
    // for foils.
    std::map<std::string, std::pair<double, double>> assertion_params;
};

SyntheticExam build_synthetic_exam(const ExamScenario& scenario);

// Behavior model for end-to-end pipeline tests: per question, with
// probability idk_prob the student answers IDK; otherwise each assertion is
// judged true independently from its 2PL curve and the judged-true labels
// form the chosen subset. Students rotate over the given versions.
std::vector<exam::ResponseRecord> simulate_exam_records(
    const std::vector<exam::ExamVersion>& versions, const std::vector<double>& theta,
    const std::map<std::string, std::pair<double, double>>& assertion_params, double idk_prob,
    std::uint64_t seed);

struct RecoveryReport {
    double rmse_alpha = 0;
    double rmse_beta = 0;
    double theta_correlation = 0;
    int n_students = 0;
    int n_items = 0;
    std::vector<std::string> flags;  // small_sample, zero_ability_variance, ...
};

// simulate -> fit_2pl_mml -> eap_abilities against the planted truth.
RecoveryReport recovery_experiment(const CohortSpec& cohort, const std::vector<ItemSpec>& items,
                                   const irt::FitOptions& opts = {});

nlohmann::json recovery_to_json(const RecoveryReport& report);

std::string format_true_params_csv(const std::vector<ItemSpec>& items);
std::string format_true_theta_csv(const std::vector<std::string>& student_ids,
                                  const std::vector<double>& theta);

}  // namespace anaquest::sim
