#include "anaquest/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "anaquest/csv.hpp"
#include "anaquest/rng.hpp"
#include "anaquest/stats.hpp"

namespace anaquest::sim {

using nlohmann::json;

namespace {

std::string student_id_for(int index, int total) {
    // zero-padded so lexicographic order matches numeric order
    std::string id = std::to_string(index + 1);
    const std::string width = std::to_string(total);
    return "s" + std::string(width.size() - std::min(width.size(), id.size()), '0') + id;
}

}  // namespace

std::vector<double> sample_abilities(const CohortSpec& spec) {
    if (spec.n_students < 1)
        throw std::invalid_argument("sample_abilities: n_students must be >= 1");
    if (spec.ability_sd < 0)
        throw std::invalid_argument("sample_abilities: ability_sd must be >= 0");
    Rng rng(spec.seed);
    std::vector<double> theta(static_cast<std::size_t>(spec.n_students));
    for (auto& t : theta) t = spec.ability_mean + spec.ability_sd * rng.normal();
    return theta;
}

irt::ResponseMatrix simulate_binary_responses(const std::vector<double>& theta,
                                              const std::vector<ItemSpec>& items,
                                              std::uint64_t seed) {
    if (items.empty()) throw std::invalid_argument("simulate_binary_responses: no items");
    for (const auto& it : items) {
        if (!std::isfinite(it.alpha) || !std::isfinite(it.beta))
            throw std::invalid_argument("simulate_binary_responses: non-finite parameters for '" +
                                        it.id + "'");
    }

    std::vector<std::string> student_ids(theta.size());
    for (std::size_t s = 0; s < theta.size(); ++s)
        student_ids[s] = student_id_for(static_cast<int>(s), static_cast<int>(theta.size()));
    std::vector<std::string> item_ids;
    item_ids.reserve(items.size());
    for (const auto& it : items) item_ids.push_back(it.id);

    irt::ResponseMatrix m(std::move(student_ids), std::move(item_ids));
    const Rng base(seed);
    for (std::size_t s = 0; s < theta.size(); ++s) {
        Rng rng = base.derive(s);  // per-student substream
        for (std::size_t i = 0; i < items.size(); ++i) {
            const double p = irt::icc(theta[s], items[i].alpha, items[i].beta);
            m.set(s, i, rng.bernoulli(p) ? 1 : 0);
        }
    }
    return m;
}

ExamScenario scenario_from_json(const json& j) {
    ExamScenario sc;
    const auto& cohort = j.at("cohort");
    sc.cohort.n_students = cohort.at("n").get<int>();
    sc.cohort.seed = cohort.at("seed").get<std::uint64_t>();
    sc.cohort.ability_mean = cohort.value("mean", 0.0);
    sc.cohort.ability_sd = cohort.value("sd", 1.0);
    sc.idk_prob = j.value("idk_prob", 0.0);
    if (sc.idk_prob < 0 || sc.idk_prob > 1)
        throw std::runtime_error("scenario: idk_prob must be in [0, 1]");

    for (const auto& ij : j.at("items")) {
        ItemSpec item;
        item.id = ij.at("id").get<std::string>();
        item.source = model::source_from_string(ij.at("source").get<std::string>());
        item.alpha = ij.at("alpha").get<double>();
        item.beta = ij.at("beta").get<double>();
        item.level = ij.value("level", "question");
        item.question_id = ij.value("question_id", "");
        if (item.level != "question" && item.level != "foil")
            throw std::runtime_error("scenario item '" + item.id +
                                     "': level must be question or foil");
        if (item.level == "foil" && item.question_id.empty())
            throw std::runtime_error("scenario foil '" + item.id + "': question_id required");
        sc.items.push_back(std::move(item));
    }
    if (sc.items.empty()) throw std::runtime_error("scenario: no items");
    return sc;
}

ExamScenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    json j;
    try {
        in >> j;
        return scenario_from_json(j);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

json scenario_to_json(const ExamScenario& scenario) {
    json items = json::array();
    for (const auto& it : scenario.items) {
        json ij{{"id", it.id},
                {"source", model::to_string(it.source)},
                {"alpha", it.alpha},
                {"beta", it.beta},
                {"level", it.level}};
        if (!it.question_id.empty()) ij["question_id"] = it.question_id;
        items.push_back(std::move(ij));
    }
    return json{{"cohort",
                 {{"n", scenario.cohort.n_students},
                  {"seed", scenario.cohort.seed},
                  {"mean", scenario.cohort.ability_mean},
                  {"sd", scenario.cohort.ability_sd}}},
                {"items", items},
                {"idk_prob", scenario.idk_prob}};
}

SyntheticExam build_synthetic_exam(const ExamScenario& scenario) {
    SyntheticExam exam;

    std::map<std::string, const ItemSpec*> questions;
    std::map<std::string, std::vector<const ItemSpec*>> foils_of;
    for (const auto& item : scenario.items) {
        if (item.level == "question") {
            if (!questions.emplace(item.id, &item).second)
                throw std::invalid_argument("scenario: duplicate question item '" + item.id + "'");
        } else {
            foils_of[item.question_id].push_back(&item);
        }
    }
    for (const auto& [qid, foils] : foils_of) {
        if (!questions.count(qid))
            throw std::invalid_argument("scenario: foil attached to unknown question '" + qid +
                                        "'");
        if (foils.size() > 2)
            throw std::invalid_argument("scenario: question '" + qid +
                                        "' has more than 2 foils (3 assertions, >= 1 correct)");
    }

    for (const auto& [qid, spec] : questions) {
        const auto fit = foils_of.find(qid);
        const std::vector<const ItemSpec*> foils =
            fit == foils_of.end() ? std::vector<const ItemSpec*>{} : fit->second;
        if (foils.empty())
            throw std::invalid_argument("scenario: question '" + qid +
                                        "' needs at least one foil");

        model::AnalyticalQuestion q;
        q.id = qid;
        q.topic.id = "topic-" + qid;
        q.topic.theme = "synthetic";
        q.topic.title = "synthetic topic " + qid;
        q.topic.objective = {"obj-" + qid, "Reason about synthetic topic " + qid + "."};
        q.source = spec->source;

        const int n_correct = 3 - static_cast<int>(foils.size());
        char label = 'A';
        for (int c = 0; c < n_correct; ++c, ++label) {
            const std::string key = qid + ":" + std::string(1, label);
            q.assertions.push_back(
                model::Assertion{label, "correct assertion " + key, true});
            exam.assertion_params[key] = {spec->alpha, spec->beta};
        }
        for (const auto* foil : foils) {
            const std::string key = qid + ":" + std::string(1, label);
            q.assertions.push_back(
                model::Assertion{label, "foil assertion " + key + " (" + foil->id + ")", false});
            exam.assertion_params[key] = {foil->alpha, foil->beta};
            ++label;
        }
        exam.questions.push_back(std::move(q));
    }
    return exam;
}

std::vector<exam::ResponseRecord> simulate_exam_records(
    const std::vector<exam::ExamVersion>& versions, const std::vector<double>& theta,
    const std::map<std::string, std::pair<double, double>>& assertion_params, double idk_prob,
    std::uint64_t seed) {
    if (versions.empty()) throw std::invalid_argument("simulate_exam_records: no versions");
    if (idk_prob < 0 || idk_prob > 1)
        throw std::invalid_argument("simulate_exam_records: idk_prob must be in [0, 1]");

    std::vector<exam::ResponseRecord> records;
    const Rng base(seed);
    for (std::size_t s = 0; s < theta.size(); ++s) {
        Rng rng = base.derive(s);
        const auto& version = versions[s % versions.size()];
        const std::string student = student_id_for(static_cast<int>(s),
                                                   static_cast<int>(theta.size()));
        for (const auto& q : version.questions) {
            exam::ResponseRecord rec;
            rec.student_id = student;
            rec.version_id = version.version_id;
            rec.question_id = q.id;
            if (rng.bernoulli(idk_prob)) {
                rec.choice = model::AnswerOption::i_dont_know();
            } else {
                auto sorted = q.assertions;
                std::sort(sorted.begin(), sorted.end(),
                          [](const model::Assertion& a, const model::Assertion& b) {
                              return a.label < b.label;
                          });
                std::uint8_t mask = 0;
                for (const auto& a : sorted) {
                    const auto key = q.id + ":" + std::string(1, a.label);
                    const auto it = assertion_params.find(key);
                    if (it == assertion_params.end())
                        throw std::invalid_argument(
                            "simulate_exam_records: no judgment parameters for '" + key + "'");
                    const double p = irt::icc(theta[s], it->second.first, it->second.second);
                    if (rng.bernoulli(p))
                        mask |= static_cast<std::uint8_t>(1u << (a.label - 'A'));
                }
                rec.choice = model::AnswerOption::subset_of(mask);
            }
            records.push_back(std::move(rec));
        }
    }
    return records;
}

RecoveryReport recovery_experiment(const CohortSpec& cohort, const std::vector<ItemSpec>& items,
                                   const irt::FitOptions& opts) {
    const auto theta_true = sample_abilities(cohort);
    const auto matrix = simulate_binary_responses(theta_true, items, cohort.seed ^ 0x5eedULL);

    RecoveryReport report;
    report.n_students = cohort.n_students;
    report.n_items = static_cast<int>(items.size());
    if (cohort.n_students < 100) report.flags.push_back("small_sample");

    const double sd_true = theta_true.size() > 1 ? stats::sample_sd(theta_true) : 0.0;
    if (sd_true == 0) {
        // no ability spread: difficulty is unidentifiable against the prior
        report.flags.push_back("zero_ability_variance");
        report.flags.push_back("beta_unidentifiable");
        return report;
    }

    const auto quad = irt::QuadratureScheme::normal_grid();
    const auto fit = irt::fit_2pl_mml(matrix, quad, opts);

    std::map<std::string, const ItemSpec*> truth;
    for (const auto& item : items) truth[item.id] = &item;
    double se_a = 0, se_b = 0;
    std::size_t n = 0;
    for (const auto& f : fit.items) {
        const auto* t = truth.at(f.params.item_id);
        se_a += (f.params.alpha - t->alpha) * (f.params.alpha - t->alpha);
        se_b += (f.params.beta - t->beta) * (f.params.beta - t->beta);
        ++n;
    }
    if (n == 0) throw std::runtime_error("recovery_experiment: no items survived the fit");
    report.rmse_alpha = std::sqrt(se_a / static_cast<double>(n));
    report.rmse_beta = std::sqrt(se_b / static_cast<double>(n));

    std::vector<irt::ItemParameters> params;
    for (const auto& f : fit.items) params.push_back(f.params);
    const auto abilities = irt::eap_abilities(matrix, params, quad);
    report.theta_correlation = stats::pearson_correlation(abilities.theta, theta_true);
    if (!fit.report.converged) report.flags.push_back("fit_not_converged");
    return report;
}

json recovery_to_json(const RecoveryReport& report) {
    return json{{"rmse_alpha", report.rmse_alpha},
                {"rmse_beta", report.rmse_beta},
                {"theta_correlation", report.theta_correlation},
                {"n_students", report.n_students},
                {"n_items", report.n_items},
                {"flags", report.flags}};
}

std::string format_true_params_csv(const std::vector<ItemSpec>& items) {
    std::string out = "item_id,source,level,alpha,beta,question_id\n";
    for (const auto& it : items) {
        out += csv::format_row({it.id, model::to_string(it.source), it.level,
                                csv::format_double(it.alpha), csv::format_double(it.beta),
                                it.question_id});
    }
    return out;
}

std::string format_true_theta_csv(const std::vector<std::string>& student_ids,
                                  const std::vector<double>& theta) {
    std::string out = "student_id,theta\n";
    for (std::size_t s = 0; s < student_ids.size(); ++s)
        out += csv::format_row({student_ids[s], csv::format_double(theta[s])});
    return out;
}

}  // namespace anaquest::sim
