#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "anaquest/irt.hpp"
#include "anaquest/manifest.hpp"
#include "anaquest/rng.hpp"
#include "anaquest/simulator.hpp"
#include "test_helpers.hpp"

using namespace anaquest;
using test_helpers::make_question;

namespace {

// canonical recovery bank: 20 items, alpha in [0.5, 2], beta in [-2, 2]
std::vector<sim::ItemSpec> recovery_items() {
    Rng rng(12345);
    std::vector<sim::ItemSpec> items;
    for (int i = 0; i < 20; ++i) {
        sim::ItemSpec it;
        it.id = "i" + std::to_string(10 + i);
        it.alpha = 0.5 + 1.5 * rng.uniform01();
        it.beta = -2.0 + 4.0 * rng.uniform01();
        items.push_back(it);
    }
    return items;
}

std::vector<sim::ItemSpec> small_bank() {
    Rng item_rng(99);
    std::vector<sim::ItemSpec> items;
    for (int i = 0; i < 12; ++i) {
        sim::ItemSpec it;
        it.id = "i" + std::to_string(10 + i);
        it.alpha = 0.6 + 1.2 * item_rng.uniform01();
        it.beta = -1.5 + 3.0 * item_rng.uniform01();
        items.push_back(it);
    }
    return items;
}

irt::ResponseMatrix duplicate_rows(const irt::ResponseMatrix& m) {
    std::vector<std::string> ids;
    for (const auto& s : m.student_ids()) ids.push_back(s + "_a");
    for (const auto& s : m.student_ids()) ids.push_back(s + "_b");
    irt::ResponseMatrix out(ids, m.item_ids());
    for (std::size_t s = 0; s < m.n_students(); ++s) {
        for (std::size_t i = 0; i < m.n_items(); ++i) {
            out.set(s, i, m.at(s, i));
            out.set(s + m.n_students(), i, m.at(s, i));
        }
    }
    return out;
}

exam::ResponseRecord record(const std::string& student, const std::string& question,
                            const std::string& code) {
    exam::ResponseRecord r;
    r.student_id = student;
    r.version_id = 'A';
    r.question_id = question;
    r.choice = model::AnswerOption::from_code(code);
    return r;
}

}  // namespace

TEST_CASE("icc evaluates the logistic curve") {
    CHECK(irt::icc(0.7, 1.3, 0.7) == 0.5);   // theta = beta
    CHECK(irt::icc(-2.0, 0.0, 1.0) == 0.5);  // alpha = 0 is flat
    CHECK(irt::icc(3.0, 0.0, -1.0) == 0.5);
    CHECK(irt::icc(1.0, 1.0, 0.0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));

    // strictly monotone: increasing for alpha > 0, decreasing for alpha < 0
    double prev_up = 0, prev_down = 1;
    for (double t = -4; t <= 4; t += 0.25) {
        const double up = irt::icc(t, 1.4, 0.3);
        const double down = irt::icc(t, -1.4, 0.3);
        if (t > -4) {
            CHECK(up > prev_up);
            CHECK(down < prev_down);
        }
        prev_up = up;
        prev_down = down;
    }
}

TEST_CASE("quadrature grid is normalized and ordered") {
    const auto q = irt::QuadratureScheme::normal_grid();
    CHECK(q.nodes.size() == 61);
    CHECK(q.nodes.front() == -5.0);
    CHECK(q.nodes.back() == 5.0);
    q.validate();
    double total = 0, mean = 0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        total += q.weights[i];
        mean += q.weights[i] * q.nodes[i];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(mean) < 1e-15);  // symmetric prior

    auto bad = q;
    bad.weights[0] *= 2;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("response matrix csv round-trips with NA cells") {
    irt::ResponseMatrix m({"s1", "s2"}, {"i1", "i2", "i3"});
    m.set(0, 0, 1);
    m.set(0, 1, 0);
    m.set(1, 0, 0);
    m.set(1, 2, 1);
    const auto text = m.format_csv();
    CHECK(text == "student_id,i1,i2,i3\ns1,1,0,NA\ns2,0,NA,1\n");

    const auto dir = test_helpers::scratch_dir("matrix_csv");
    const auto path = (dir / "m.csv").string();
    atomic_write(path, text);
    const auto back = irt::ResponseMatrix::read_csv(path);
    CHECK(back.format_csv() == text);

    atomic_write(path, "student_id,i1\ns1,2\ns2,0\n");
    CHECK_THROWS_WITH_AS(irt::ResponseMatrix::read_csv(path),
                         doctest::Contains("expected 0, 1 or NA"), std::runtime_error);
}

TEST_CASE("response matrix validation names the broken invariant") {
    irt::ResponseMatrix no_data({"s1", "s2"}, {"i1", "i2"});
    no_data.set(0, 0, 1);
    CHECK_THROWS_WITH_AS(no_data.validate(), doctest::Contains("no non-missing cells"),
                         std::invalid_argument);

    irt::ResponseMatrix one_item({"s1", "s2"}, {"i1"});
    one_item.set(0, 0, 1);
    one_item.set(1, 0, 0);
    CHECK_THROWS_AS(one_item.validate(), std::invalid_argument);
}

TEST_CASE("2pl recovery on the canonical 1000 x 20 bank meets frozen thresholds") {
    const sim::CohortSpec cohort{1000, 0, 0.0, 1.0};
    const auto report = sim::recovery_experiment(cohort, recovery_items(), {});
    CHECK(report.rmse_alpha <= 0.20);
    CHECK(report.rmse_beta <= 0.15);
    CHECK(report.theta_correlation >= 0.85);
    CHECK(report.flags.empty());
}

TEST_CASE("EM objective trace is non-decreasing") {
    const sim::CohortSpec cohort{400, 5, 0.0, 1.0};
    const auto items = recovery_items();
    const auto theta = sim::sample_abilities(cohort);
    const auto m = sim::simulate_binary_responses(theta, items, 99);
    const auto fit = irt::fit_2pl_mml(m, irt::QuadratureScheme::normal_grid(), {});
    CHECK(fit.report.converged);
    REQUIRE(fit.report.objective_trace.size() >= 2);
    for (std::size_t k = 1; k < fit.report.objective_trace.size(); ++k) {
        CHECK(fit.report.objective_trace[k] - fit.report.objective_trace[k - 1] >= -1e-9);
    }
}

TEST_CASE("a flat item is flagged near-degenerate") {
    const sim::CohortSpec cohort{1000, 0, 0.0, 1.0};
    auto items = recovery_items();
    items[5].alpha = 0.0;  // carries no information about theta
    const auto theta = sim::sample_abilities(cohort);
    const auto m = sim::simulate_binary_responses(theta, items, 777);
    const auto fit = irt::fit_2pl_mml(m, irt::QuadratureScheme::normal_grid(), {});
    bool found = false;
    for (const auto& f : fit.items) {
        if (f.params.item_id == items[5].id) {
            found = true;
            CHECK(std::count(f.flags.begin(), f.flags.end(), "near_degenerate") == 1);
        } else {
            CHECK(f.flags.empty());
        }
    }
    CHECK(found);
}

TEST_CASE("all-0 and all-1 items are excluded with a notice") {
    irt::ResponseMatrix m({"s1", "s2", "s3", "s4"}, {"ok1", "ok2", "allzero", "allone"});
    for (std::size_t s = 0; s < 4; ++s) {
        m.set(s, 0, s < 2 ? 1 : 0);
        m.set(s, 1, s % 2 == 0 ? 1 : 0);
        m.set(s, 2, 0);
        m.set(s, 3, 1);
    }
    const auto fit = irt::fit_2pl_mml(m, irt::QuadratureScheme::normal_grid(), {});
    CHECK(fit.report.excluded_items == std::vector<std::string>{"allzero", "allone"});
    CHECK(fit.items.size() == 2);
}

TEST_CASE("duplicating every student row leaves estimates unchanged") {
    const sim::CohortSpec cohort{400, 3, 0.0, 1.0};
    const auto items = small_bank();
    const auto theta = sim::sample_abilities(cohort);
    const auto m = sim::simulate_binary_responses(theta, items, 555);
    const auto quad = irt::QuadratureScheme::normal_grid();
    irt::FitOptions tight;
    tight.tol = 1e-6;  // isolate the invariance from EM stopping noise
    const auto base = irt::fit_2pl_mml(m, quad, tight);
    const auto doubled = irt::fit_2pl_mml(duplicate_rows(m), quad, tight);
    REQUIRE(base.items.size() == doubled.items.size());
    for (std::size_t k = 0; k < base.items.size(); ++k) {
        CHECK(std::fabs(base.items[k].params.alpha - doubled.items[k].params.alpha) <= 1e-6);
        CHECK(std::fabs(base.items[k].params.beta - doubled.items[k].params.beta) <= 1e-6);
    }
}

TEST_CASE("fit is invariant to row and column permutations") {
    const sim::CohortSpec cohort{400, 3, 0.0, 1.0};
    const auto items = small_bank();
    const auto theta = sim::sample_abilities(cohort);
    const auto m = sim::simulate_binary_responses(theta, items, 555);
    const auto quad = irt::QuadratureScheme::normal_grid();
    irt::FitOptions tight;
    tight.tol = 1e-6;
    const auto base = irt::fit_2pl_mml(m, quad, tight);

    std::vector<std::size_t> rperm(m.n_students()), cperm(m.n_items());
    for (std::size_t i = 0; i < rperm.size(); ++i) rperm[i] = i;
    for (std::size_t i = 0; i < cperm.size(); ++i) cperm[i] = i;
    Rng shuffle_rng(4242);
    for (std::size_t i = rperm.size(); i > 1; --i)
        std::swap(rperm[i - 1], rperm[shuffle_rng.below(i)]);
    for (std::size_t i = cperm.size(); i > 1; --i)
        std::swap(cperm[i - 1], cperm[shuffle_rng.below(i)]);
    std::vector<std::string> sids, iids;
    for (auto r : rperm) sids.push_back(m.student_ids()[r]);
    for (auto c : cperm) iids.push_back(m.item_ids()[c]);
    irt::ResponseMatrix shuffled(sids, iids);
    for (std::size_t s = 0; s < m.n_students(); ++s)
        for (std::size_t i = 0; i < m.n_items(); ++i) shuffled.set(s, i, m.at(rperm[s], cperm[i]));

    const auto permuted = irt::fit_2pl_mml(shuffled, quad, tight);
    std::map<std::string, std::pair<double, double>> by_id;
    for (const auto& f : base.items) by_id[f.params.item_id] = {f.params.alpha, f.params.beta};
    for (const auto& f : permuted.items) {
        CHECK(std::fabs(by_id.at(f.params.item_id).first - f.params.alpha) <= 1e-8);
        CHECK(std::fabs(by_id.at(f.params.item_id).second - f.params.beta) <= 1e-8);
    }
}

TEST_CASE("threaded E-step reruns are bitwise identical") {
    const sim::CohortSpec cohort{300, 17, 0.0, 1.0};
    const auto items = recovery_items();
    const auto theta = sim::sample_abilities(cohort);
    const auto m = sim::simulate_binary_responses(theta, items, 21);
    irt::FitOptions opts;
    opts.threads = 3;
    const auto quad = irt::QuadratureScheme::normal_grid();
    const auto a = irt::fit_2pl_mml(m, quad, opts);
    const auto b = irt::fit_2pl_mml(m, quad, opts);
    REQUIRE(a.items.size() == b.items.size());
    for (std::size_t k = 0; k < a.items.size(); ++k) {
        CHECK(a.items[k].params.alpha == b.items[k].params.alpha);
        CHECK(a.items[k].params.beta == b.items[k].params.beta);
    }
    CHECK(a.report.objective_trace == b.report.objective_trace);
}

TEST_CASE("EAP ranks the all-correct student above the all-incorrect one") {
    const auto items = recovery_items();
    std::vector<std::string> iids;
    for (const auto& it : items) iids.push_back(it.id);
    irt::ResponseMatrix m({"best", "worst", "idle"}, iids);
    for (std::size_t i = 0; i < iids.size(); ++i) {
        m.set(0, i, 1);
        m.set(1, i, 0);
    }
    std::vector<irt::ItemParameters> params;
    for (const auto& it : items) params.push_back({it.id, it.alpha, it.beta});
    const auto ab = irt::eap_abilities(m, params, irt::QuadratureScheme::normal_grid());
    CHECK(ab.theta[0] > ab.theta[1]);

    // no data: the prior speaks
    CHECK(std::fabs(ab.theta[2]) < 1e-12);
    CHECK(ab.posterior_sd[2] == doctest::Approx(1.0).epsilon(1e-3));

    const auto missing = std::vector<irt::ItemParameters>{params[0]};
    CHECK_THROWS_WITH_AS(irt::eap_abilities(m, missing, irt::QuadratureScheme::normal_grid()),
                         doctest::Contains("no parameters for item"), std::invalid_argument);
}

TEST_CASE("outlier rule keeps the closed 3 SD band") {
    irt::AbilityEstimates ab;
    for (int i = 0; i < 40; ++i) {
        ab.student_ids.push_back("s" + std::to_string(i));
        ab.theta.push_back(0.1 * i);
        ab.posterior_sd.push_back(0.3);
    }
    const double m = stats::mean(ab.theta);
    const double sd = stats::sample_sd(ab.theta);

    const std::vector<irt::ItemParameters> params = {
        {"interior", 1.0, m},
        {"low2", 1.0, m - 2 * sd},
        {"high2", 1.0, m + 2 * sd},
        {"low4", 1.0, m - 4 * sd},
        {"high4", 1.0, m + 4 * sd},
        {"edge3", 1.0, m + 3 * sd},
        {"edge3neg", 1.0, m - 3 * sd},
    };
    const auto split = irt::filter_outlier_items(params, ab);
    std::vector<std::string> kept, excluded;
    for (const auto& p : split.kept) kept.push_back(p.item_id);
    for (const auto& p : split.excluded) excluded.push_back(p.item_id);
    CHECK(kept == std::vector<std::string>{"interior", "low2", "high2", "edge3", "edge3neg"});
    CHECK(excluded == std::vector<std::string>{"low4", "high4"});
}

TEST_CASE("question matrix dichotomizes on exact match with IDK as zero") {
    const std::vector<model::AnalyticalQuestion> questions = {
        make_question("q1", "t1", model::Source::Human, "TFT"),  // correct option AC
        make_question("q2", "t2", model::Source::AnaQuest, "TFF"),
    };
    std::vector<exam::ResponseRecord> records = {
        record("s1", "q1", "AC"),   // exact match -> 1
        record("s1", "q2", "AB"),   // wrong -> 0
        record("s2", "q1", "A"),    // subset but not exact -> 0
        record("s2", "q2", "IDK"),  // scorable non-correct -> 0
    };
    const auto m = irt::build_question_matrix(questions, records);
    CHECK(m.item_ids() == std::vector<std::string>{"q1", "q2"});
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(0, 1) == 0);
    CHECK(m.at(1, 0) == 0);
    CHECK(m.at(1, 1) == 0);

    records.push_back(record("s1", "q1", "AC"));
    CHECK_THROWS_WITH_AS(irt::build_question_matrix(questions, records),
                         doctest::Contains("duplicate record"), std::runtime_error);
}

TEST_CASE("foil matrix marks inclusion, exclusion and IDK-missing") {
    // q1: B and C are foils; q2: B is the only foil
    const std::vector<model::AnalyticalQuestion> questions = {
        make_question("q1", "t1", model::Source::Human, "TFF"),
        make_question("q2", "t2", model::Source::Baseline, "TFT"),
    };
    const std::vector<exam::ResponseRecord> records = {
        record("s1", "q1", "AB"),   // includes foil B, excludes foil C
        record("s1", "q2", "IDK"),  // missing for q2's foil
        record("s2", "q1", "A"),    // excludes both foils
    };
    const auto m = irt::build_foil_matrix(questions, records, true);
    CHECK(m.item_ids() == std::vector<std::string>{"q1:B", "q1:C", "q2:B"});
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(0, 1) == 0);
    CHECK(m.at(0, 2) == irt::ResponseMatrix::kMissing);
    CHECK(m.at(1, 0) == 0);
    CHECK(m.at(1, 1) == 0);
    CHECK(m.at(1, 2) == irt::ResponseMatrix::kMissing);  // s2 never answered q2

    const auto m0 = irt::build_foil_matrix(questions, records, false);
    CHECK(m0.at(0, 2) == 0);  // IDK as 0 when configured
}

TEST_CASE("foil fit recovers planted negative parameters with fixed abilities") {
    const sim::CohortSpec cohort{1000, 0, 0.0, 1.0};
    const auto theta = sim::sample_abilities(cohort);
    const sim::ItemSpec foil{"f1", model::Source::Human, -1.2, -0.8, "foil", "q1"};
    const auto m = sim::simulate_binary_responses(theta, {foil, foil}, 1000);
    irt::AbilityEstimates ab;
    ab.student_ids = m.student_ids();
    ab.theta = theta;
    ab.posterior_sd.assign(theta.size(), 0.0);
    const auto fits = irt::fit_foils_fixed_theta(m, ab, {});
    REQUIRE(fits.size() == 2);
    CHECK(std::fabs(fits[0].params.alpha + 1.2) <= 0.25);
    CHECK(std::fabs(fits[0].params.beta + 0.8) <= 0.25);
    CHECK(fits[0].params.alpha < 0);
    CHECK(fits[0].grad_norm <= 1e-6);
    CHECK(fits[0].flags.empty());
}

TEST_CASE("a theta-independent foil fits a near-zero slope") {
    Rng rng(31337);
    std::vector<std::string> sids;
    std::vector<double> theta;
    for (int i = 0; i < 2000; ++i) {
        sids.push_back("s" + std::to_string(i));
        theta.push_back(rng.normal());
    }
    irt::ResponseMatrix m(sids, {"flat", "pad"});
    for (std::size_t s = 0; s < sids.size(); ++s) {
        m.set(s, 0, rng.bernoulli(0.5) ? 1 : 0);  // p = 0.5 regardless of theta
        m.set(s, 1, rng.bernoulli(0.5) ? 1 : 0);
    }
    irt::AbilityEstimates ab{sids, theta, std::vector<double>(sids.size(), 0.0)};
    const auto fits = irt::fit_foils_fixed_theta(m, ab, {});
    CHECK(std::fabs(fits[0].params.alpha) <= 0.15);  // ~3 standard errors at n = 2000
    CHECK(fits[0].grad_norm <= 1e-6);
}

TEST_CASE("complete separation is flagged and stays finite under the ridge") {
    std::vector<std::string> sids;
    std::vector<double> theta;
    for (int i = 0; i < 60; ++i) {
        sids.push_back("s" + std::to_string(i));
        theta.push_back(-1.5 + 3.0 * i / 59.0);
    }
    irt::ResponseMatrix m(sids, {"sep", "pad"});
    for (std::size_t s = 0; s < sids.size(); ++s) {
        m.set(s, 0, theta[s] < 0 ? 1 : 0);  // perfectly split on theta
        m.set(s, 1, s % 2 == 0 ? 1 : 0);
    }
    irt::AbilityEstimates ab{sids, theta, std::vector<double>(sids.size(), 0.0)};
    const auto fits = irt::fit_foils_fixed_theta(m, ab, {});
    CHECK(std::count(fits[0].flags.begin(), fits[0].flags.end(), "separated") == 1);
    CHECK(std::isfinite(fits[0].params.alpha));
    CHECK(std::isfinite(fits[0].params.beta));
    CHECK(fits[0].params.alpha < 0);

    // constant responses flagged too
    irt::ResponseMatrix mc(sids, {"const", "pad"});
    for (std::size_t s = 0; s < sids.size(); ++s) {
        mc.set(s, 0, 1);
        mc.set(s, 1, s % 2 == 0 ? 1 : 0);
    }
    const auto cfits = irt::fit_foils_fixed_theta(mc, ab, {});
    CHECK(std::count(cfits[0].flags.begin(), cfits[0].flags.end(), "constant_responses") == 1);
}

TEST_CASE("analytic foil gradient matches finite differences") {
    Rng rng(555);
    std::vector<double> t, x, n;
    for (int i = 0; i < 200; ++i) {
        t.push_back(rng.normal());
        x.push_back(rng.bernoulli(irt::icc(t.back(), -1.0, -0.5)) ? 1.0 : 0.0);
        n.push_back(1.0);
    }
    const double ridge = 1e-3;
    for (int k = 0; k < 12; ++k) {
        const double alpha = -2.5 + 5.0 * rng.uniform01();
        const double beta = -2.0 + 4.0 * rng.uniform01();
        const auto g = irt::pl2_gradient(t, x, n, ridge, alpha, beta);
        const double h = 1e-6;
        const double fd_a = (irt::pl2_objective(t, x, n, ridge, alpha + h, beta) -
                             irt::pl2_objective(t, x, n, ridge, alpha - h, beta)) /
                            (2 * h);
        const double fd_b = (irt::pl2_objective(t, x, n, ridge, alpha, beta + h) -
                             irt::pl2_objective(t, x, n, ridge, alpha, beta - h)) /
                            (2 * h);
        CHECK(g[0] == doctest::Approx(fd_a).epsilon(1e-4));
        CHECK(g[1] == doctest::Approx(fd_b).epsilon(1e-4));
    }
}

TEST_CASE("mean_source_curve averages within each source") {
    std::map<model::Source, std::vector<irt::ItemParameters>> groups;
    groups[model::Source::Human] = {{"a", 1.0, 0.0}, {"b", 2.0, 2.0}};
    groups[model::Source::Baseline] = {{"c", -0.7, -1.1}};
    const auto curves = irt::mean_source_curve(groups);
    CHECK(curves.at(model::Source::Human).alpha == doctest::Approx(1.5));
    CHECK(curves.at(model::Source::Human).beta == doctest::Approx(1.0));
    CHECK(curves.at(model::Source::Baseline).alpha == doctest::Approx(-0.7));
    CHECK(curves.at(model::Source::Baseline).beta == doctest::Approx(-1.1));

    groups[model::Source::AnaQuest] = {};
    CHECK_THROWS_AS(irt::mean_source_curve(groups), std::invalid_argument);
}

TEST_CASE("params and abilities csv round-trip") {
    const std::vector<irt::SourcedItem> items = {
        {"q1", "Human", "question", 1.25, -0.5, ""},
        {"q2:B", "Baseline", "foil", -1.5, -1.0, "separated"},
    };
    const auto dir = test_helpers::scratch_dir("params_csv");
    const auto path = (dir / "params.csv").string();
    atomic_write(path, irt::format_params_csv(items));
    const auto back = irt::read_params_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].alpha == 1.25);
    CHECK(back[1].level == "foil");
    CHECK(back[1].flags == "separated");

    atomic_write(path, "item_id,source,level,alpha,beta,flags\nq1,Human,chapter,1,0,\n");
    CHECK_THROWS_WITH_AS(irt::read_params_csv(path), doctest::Contains("level"),
                         std::runtime_error);

    irt::AbilityEstimates ab{{"s1", "s2"}, {0.5, -1.25}, {0.31, 0.4}};
    const auto apath = (dir / "abilities.csv").string();
    atomic_write(apath, irt::format_abilities_csv(ab));
    const auto ab_back = irt::read_abilities_csv(apath);
    CHECK(ab_back.student_ids == ab.student_ids);
    CHECK(ab_back.theta == ab.theta);
    CHECK(ab_back.posterior_sd == ab.posterior_sd);
}
