#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "anaquest/exam.hpp"
#include "anaquest/model.hpp"
#include "anaquest/stats.hpp"

namespace anaquest::irt {

// Two-parameter logistic item characteristic curve.
inline double icc(double theta, double alpha, double beta) {
    return stats::sigmoid(alpha * (theta - beta));
}

struct ItemParameters {
    std::string item_id;
    double alpha = 1.0;  // discrimination; question-level fits keep it positive
    double beta = 0.0;   // difficulty, on the ability scale
};

// Dichotomous response matrix with missing cells. Rows are students,
// columns are items.
class ResponseMatrix {
public:
    static constexpr std::int8_t kMissing = -1;

    ResponseMatrix() = default;
    ResponseMatrix(std::vector<std::string> student_ids, std::vector<std::string> item_ids);

    void set(std::size_t student, std::size_t item, int value);  // 0, 1 or kMissing
    int at(std::size_t student, std::size_t item) const;

    std::size_t n_students() const { return student_ids_.size(); }
    std::size_t n_items() const { return item_ids_.size(); }
    const std::vector<std::string>& student_ids() const { return student_ids_; }
    const std::vector<std::string>& item_ids() const { return item_ids_; }

    // >= 2 students and >= 2 items with data, every student >= 1 cell.
    void validate() const;

    // CSV: header student_id,<item...>; cells 0, 1 or NA.
    static ResponseMatrix read_csv(const std::string& path);
    std::string format_csv() const;

private:
    std::vector<std::string> student_ids_;
    std::vector<std::string> item_ids_;
    std::vector<std::int8_t> cells_;  // row-major, kMissing by default
};

// Quadrature over the ability prior: equally spaced nodes with
// standard-normal weights, renormalized.
struct QuadratureScheme {
    std::vector<double> nodes;
    std::vector<double> weights;

    static QuadratureScheme normal_grid(int n = 61, double span = 5.0);
    void validate() const;  // strictly increasing nodes, weights sum to 1
};

struct FitOptions {
    double tol = 1e-4;             // EM stop: max absolute parameter change
    int max_iterations = 500;      // EM cap
    int newton_cap = 25;           // M-step inner Newton steps
    double ridge = 1e-3;           // per-response ridge coefficient on (alpha, beta)
    double degenerate_lr = 3.84;   // LR vs constant model under which an item is posterior-flat
    int threads = 1;               // E-step chunking; reductions are fixed-order
};

struct ItemFit {
    ItemParameters params;
    std::vector<std::string> flags;  // near_degenerate, separated, not_converged, ...
    double grad_norm = 0;            // at the returned optimum, in the free parameters
};

struct ConvergenceReport {
    bool converged = false;
    int iterations = 0;
    // Penalized marginal log-likelihood before each M-step plus the final
    // value; EM guarantees this never decreases.
    std::vector<double> objective_trace;
    std::vector<std::string> excluded_items;  // all-0/all-1 items, with no fit
    std::vector<std::string> notes;
};

struct FitResult {
    std::vector<ItemFit> items;
    ConvergenceReport report;
};

// Marginal maximum likelihood EM for the 2PL under a standard-normal
// ability prior. Missing cells contribute nothing; the M-step runs Newton
// on (log alpha, beta) with step-halving, keeping discrimination positive.
FitResult fit_2pl_mml(const ResponseMatrix& m, const QuadratureScheme& quad,
                      const FitOptions& opts = {});

struct AbilityEstimates {
    std::vector<std::string> student_ids;
    std::vector<double> theta;         // EAP posterior means
    std::vector<double> posterior_sd;
};

AbilityEstimates eap_abilities(const ResponseMatrix& m, const std::vector<ItemParameters>& params,
                               const QuadratureScheme& quad);

struct OutlierSplit {
    std::vector<ItemParameters> kept;
    std::vector<ItemParameters> excluded;
};

// Items with difficulty outside mean(theta) +- 3 sample SD are excluded;
// the band is closed, so exactly 3 SD is kept.
OutlierSplit filter_outlier_items(const std::vector<ItemParameters>& params,
                                  const AbilityEstimates& abilities);

// Question-level dichotomization: 1 iff the chosen subset matches the
// correct subset exactly; IDK counts as 0; no record means missing.
ResponseMatrix build_question_matrix(const std::vector<model::AnalyticalQuestion>& questions,
                                     const std::vector<exam::ResponseRecord>& records);

// Foil-level matrix: one item per incorrect assertion, id "<qid>:<label>".
// Cell is 1 when the chosen subset includes the foil, 0 when it excludes
// it; IDK expresses no judgment and maps to missing by default.
ResponseMatrix build_foil_matrix(const std::vector<model::AnalyticalQuestion>& questions,
                                 const std::vector<exam::ResponseRecord>& records,
                                 bool idk_as_missing = true);

struct FoilFitOptions {
    double ridge = 1e-3;    // per-response ridge coefficient
    int max_steps = 50;
    double grad_tol = 1e-8;
};

// Per-foil Bernoulli fit of icc(theta_j; alpha, beta) with abilities held
// fixed: 2-parameter logistic regression on theta, Newton/IRLS, alpha
// unconstrained in sign. Separation is tamed by the ridge and flagged.
std::vector<ItemFit> fit_foils_fixed_theta(const ResponseMatrix& m,
                                           const AbilityEstimates& abilities,
                                           const FoilFitOptions& opts = {});

// Penalized Bernoulli log-likelihood for weighted responses at ability
// points t (r successes of n trials each) and its analytic gradient in
// (alpha, beta). ridge is the per-response coefficient. Exposed so the
// optimum can be verified against finite differences.
double pl2_objective(const std::vector<double>& t, const std::vector<double>& r,
                     const std::vector<double>& n, double ridge, double alpha, double beta);
std::array<double, 2> pl2_gradient(const std::vector<double>& t, const std::vector<double>& r,
                                   const std::vector<double>& n, double ridge, double alpha,
                                   double beta);

struct MeanCurve {
    double alpha = 0;
    double beta = 0;
};

// Arithmetic means of (alpha, beta) within each source, for ICC plotting.
std::map<model::Source, MeanCurve> mean_source_curve(
    const std::map<model::Source, std::vector<ItemParameters>>& by_source);

// Parameter file rows: item_id,source,level,alpha,beta,flags.
struct SourcedItem {
    std::string item_id;
    std::string source;  // Human/AnaQuest/Baseline, may be empty when unknown
    std::string level;   // question or foil
    double alpha = 0;
    double beta = 0;
    std::string flags;   // semicolon-joined
};

std::string format_params_csv(const std::vector<SourcedItem>& items);
std::vector<SourcedItem> read_params_csv(const std::string& path);

std::string format_abilities_csv(const AbilityEstimates& abilities);
AbilityEstimates read_abilities_csv(const std::string& path);

}  // namespace anaquest::irt
