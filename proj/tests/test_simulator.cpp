#include <doctest.h>

#include <cmath>
#include <set>

#include "anaquest/rng.hpp"
#include "anaquest/simulator.hpp"
#include "anaquest/stats.hpp"
#include "test_helpers.hpp"

using namespace anaquest;

TEST_CASE("sample_abilities matches the configured distribution at scale") {
    const auto theta = sim::sample_abilities({100000, 7, 0.0, 1.0});
    CHECK(std::fabs(stats::mean(theta)) <= 0.02);
    CHECK(std::fabs(stats::sample_sd(theta) - 1.0) <= 0.02);
}

TEST_CASE("sample_abilities is seed-deterministic") {
    const auto a = sim::sample_abilities({100, 42, 0.0, 1.0});
    const auto b = sim::sample_abilities({100, 42, 0.0, 1.0});
    CHECK(a == b);
    const auto c = sim::sample_abilities({100, 43, 0.0, 1.0});
    CHECK(a != c);

    const auto single = sim::sample_abilities({1, 0, 0.0, 1.0});
    REQUIRE(single.size() == 1);
    CHECK(std::isfinite(single[0]));

    CHECK_THROWS_AS(sim::sample_abilities({0, 1, 0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("a flat item draws at its base rate") {
    const auto theta = sim::sample_abilities({10000, 3, 0.0, 1.0});
    const sim::ItemSpec flat{"flat", model::Source::Human, 0.0, 0.0, "question", ""};
    const sim::ItemSpec pad{"pad", model::Source::Human, 1.0, 0.0, "question", ""};
    const auto m = sim::simulate_binary_responses(theta, {flat, pad}, 11);
    double rate = 0;
    for (std::size_t s = 0; s < m.n_students(); ++s) rate += m.at(s, 0);
    rate /= static_cast<double>(m.n_students());
    CHECK(std::fabs(rate - 0.5) <= 0.02);
}

TEST_CASE("high-ability students clear a steep item") {
    const auto theta = sim::sample_abilities({10000, 5, 0.0, 1.0});
    const sim::ItemSpec steep{"steep", model::Source::Human, 2.0, 0.0, "question", ""};
    const sim::ItemSpec pad{"pad", model::Source::Human, 1.0, 0.0, "question", ""};
    const auto m = sim::simulate_binary_responses(theta, {steep, pad}, 5);
    int n_bin = 0, n_correct = 0;
    for (std::size_t s = 0; s < theta.size(); ++s) {
        if (theta[s] > 1.0) {
            ++n_bin;
            n_correct += m.at(s, 0);
        }
    }
    REQUIRE(n_bin >= 1000);  // ~16% of 10k
    CHECK(static_cast<double>(n_correct) / n_bin >= 0.85);  // icc(1; 2, 0) ~ 0.881
}

TEST_CASE("simulated response frequencies converge to the icc") {
    const auto theta = sim::sample_abilities({10000, 11, 0.0, 1.0});
    Rng item_rng(22);
    std::vector<sim::ItemSpec> items;
    for (int i = 0; i < 20; ++i) {
        sim::ItemSpec it;
        it.id = "i" + std::to_string(10 + i);
        it.alpha = -2.0 + 4.0 * item_rng.uniform01();
        it.beta = -2.0 + 4.0 * item_rng.uniform01();
        items.push_back(it);
    }
    const auto m = sim::simulate_binary_responses(theta, items, 33);
    const double bound = 3.0 / std::sqrt(10000.0);
    for (std::size_t i = 0; i < items.size(); ++i) {
        double emp = 0, expected = 0;
        for (std::size_t s = 0; s < theta.size(); ++s) {
            emp += m.at(s, i);
            expected += irt::icc(theta[s], items[i].alpha, items[i].beta);
        }
        CHECK(std::fabs(emp - expected) / static_cast<double>(theta.size()) <= bound);
    }
}

TEST_CASE("binary simulation is reproducible bit for bit") {
    const auto theta = sim::sample_abilities({200, 9, 0.0, 1.0});
    const sim::ItemSpec a{"a", model::Source::Human, 1.0, 0.0, "question", ""};
    const sim::ItemSpec b{"b", model::Source::Human, 1.5, 0.5, "question", ""};
    const auto m1 = sim::simulate_binary_responses(theta, {a, b}, 77);
    const auto m2 = sim::simulate_binary_responses(theta, {a, b}, 77);
    CHECK(m1.format_csv() == m2.format_csv());
    const auto m3 = sim::simulate_binary_responses(theta, {a, b}, 78);
    CHECK(m1.format_csv() != m3.format_csv());
}

namespace {

sim::ExamScenario tiny_scenario(double idk_prob, std::uint64_t seed = 3) {
    sim::ExamScenario sc;
    sc.cohort = {40, seed, 0.0, 1.0};
    sc.idk_prob = idk_prob;
    sc.items = {
        {"q1", model::Source::Human, 1.2, 0.0, "question", ""},
        {"q1f", model::Source::Human, -1.2, -0.8, "foil", "q1"},
        {"q2", model::Source::AnaQuest, 0.9, 0.3, "question", ""},
        {"q2f1", model::Source::AnaQuest, -1.0, -0.6, "foil", "q2"},
        {"q2f2", model::Source::AnaQuest, -1.4, -1.0, "foil", "q2"},
    };
    return sc;
}

}  // namespace

TEST_CASE("synthetic exam questions validate and carry judgment parameters") {
    const auto exam_data = sim::build_synthetic_exam(tiny_scenario(0.0));
    REQUIRE(exam_data.questions.size() == 2);
    for (const auto& q : exam_data.questions) {
        CHECK(model::validate_question(q).empty());
        for (const auto& a : q.assertions) {
            CHECK(exam_data.assertion_params.count(q.id + ":" + std::string(1, a.label)) == 1);
        }
    }
    // q1 has two correct assertions + one foil, q2 one correct + two foils
    const auto& q1 = exam_data.questions[0];
    CHECK(std::count_if(q1.assertions.begin(), q1.assertions.end(),
                        [](const model::Assertion& a) { return a.truth; }) == 2);

    auto bad = tiny_scenario(0.0);
    bad.items.push_back({"q9f", model::Source::Human, -1, -1, "foil", "nope"});
    CHECK_THROWS_WITH_AS(sim::build_synthetic_exam(bad), doctest::Contains("unknown question"),
                         std::invalid_argument);

    auto lonely = tiny_scenario(0.0);
    lonely.items.push_back({"q3", model::Source::Human, 1.0, 0.0, "question", ""});
    CHECK_THROWS_WITH_AS(sim::build_synthetic_exam(lonely),
                         doctest::Contains("at least one foil"), std::invalid_argument);
}

TEST_CASE("idk probability one yields IDK for every record") {
    const auto sc = tiny_scenario(1.0);
    const auto exam_data = sim::build_synthetic_exam(sc);
    const auto theta = sim::sample_abilities(sc.cohort);
    const exam::ExamVersion version{'A', exam_data.questions};
    const auto records =
        sim::simulate_exam_records({version}, theta, exam_data.assertion_params, 1.0, 5);
    REQUIRE(records.size() == theta.size() * exam_data.questions.size());
    for (const auto& r : records) CHECK(r.choice.is_idk());
}

TEST_CASE("records always reference valid options and questions") {
    const auto sc = tiny_scenario(0.25);
    const auto exam_data = sim::build_synthetic_exam(sc);
    const auto theta = sim::sample_abilities(sc.cohort);
    const exam::ExamVersion version{'A', exam_data.questions};
    const auto records =
        sim::simulate_exam_records({version}, theta, exam_data.assertion_params, sc.idk_prob, 5);
    std::set<std::string> qids;
    for (const auto& q : exam_data.questions) qids.insert(q.id);
    for (const auto& r : records) {
        CHECK(qids.count(r.question_id) == 1);
        CHECK((r.choice.is_idk() || r.choice.mask() <= 0b111));
    }
    // deterministic rerun
    const auto again =
        sim::simulate_exam_records({version}, theta, exam_data.assertion_params, sc.idk_prob, 5);
    CHECK(exam::format_responses_csv(records) == exam::format_responses_csv(again));
}

TEST_CASE("a high-ability cohort beats a low-ability cohort on exact matches") {
    sim::ExamScenario sc = tiny_scenario(0.0);
    sc.cohort.n_students = 400;
    const auto exam_data = sim::build_synthetic_exam(sc);
    const exam::ExamVersion version{'A', exam_data.questions};

    const auto run_rate = [&](double mean_shift) {
        auto cohort = sc.cohort;
        cohort.ability_mean = mean_shift;
        const auto theta = sim::sample_abilities(cohort);
        const auto records =
            sim::simulate_exam_records({version}, theta, exam_data.assertion_params, 0.0, 5);
        std::map<std::string, model::AnalyticalQuestion> by_id;
        for (const auto& q : exam_data.questions) by_id[q.id] = q;
        return exam::correctness_ratio(by_id, records);
    };
    CHECK(run_rate(1.5) > run_rate(-1.5));
}

TEST_CASE("students rotate over versions") {
    const auto sc = tiny_scenario(0.0);
    const auto exam_data = sim::build_synthetic_exam(sc);
    const auto theta = sim::sample_abilities(sc.cohort);
    const exam::ExamVersion va{'A', {exam_data.questions[0]}};
    const exam::ExamVersion vb{'B', {exam_data.questions[1]}};
    const auto records =
        sim::simulate_exam_records({va, vb}, theta, exam_data.assertion_params, 0.0, 5);
    std::set<char> versions;
    for (const auto& r : records) versions.insert(r.version_id);
    CHECK(versions == std::set<char>{'A', 'B'});
}

TEST_CASE("recovery on a classroom-sized cohort is flagged small-sample") {
    // oracle-derived bounds, frozen for this seed; estimator noise at n = 50
    // is far above the large-cohort thresholds
    Rng item_rng(12345);
    std::vector<sim::ItemSpec> items;
    for (int i = 0; i < 20; ++i) {
        sim::ItemSpec it;
        it.id = "i" + std::to_string(10 + i);
        it.alpha = 0.5 + 1.5 * item_rng.uniform01();
        it.beta = -2.0 + 4.0 * item_rng.uniform01();
        items.push_back(it);
    }
    const auto report = sim::recovery_experiment({50, 0, 0.0, 1.0}, items, {});
    CHECK(std::count(report.flags.begin(), report.flags.end(), "small_sample") == 1);
    CHECK(report.rmse_alpha <= 0.80);
    CHECK(report.rmse_beta <= 0.55);
    CHECK(report.theta_correlation >= 0.80);
}

TEST_CASE("a zero-variance cohort is flagged unidentifiable") {
    const std::vector<sim::ItemSpec> items = {
        {"a", model::Source::Human, 1.0, 0.0, "question", ""},
        {"b", model::Source::Human, 1.5, 0.5, "question", ""},
    };
    const auto report = sim::recovery_experiment({100, 4, 0.0, 0.0}, items, {});
    CHECK(std::count(report.flags.begin(), report.flags.end(), "zero_ability_variance") == 1);
    CHECK(std::count(report.flags.begin(), report.flags.end(), "beta_unidentifiable") == 1);
}

TEST_CASE("scenario json round-trips") {
    const auto sc = tiny_scenario(0.3, 123);
    const auto j = sim::scenario_to_json(sc);
    const auto back = sim::scenario_from_json(j);
    CHECK(back.cohort.n_students == sc.cohort.n_students);
    CHECK(back.cohort.seed == sc.cohort.seed);
    CHECK(back.idk_prob == sc.idk_prob);
    REQUIRE(back.items.size() == sc.items.size());
    CHECK(back.items[1].question_id == "q1");
    CHECK(back.items[1].level == "foil");

    auto bad = j;
    bad["idk_prob"] = 1.5;
    CHECK_THROWS(sim::scenario_from_json(bad));
}

TEST_CASE("derived substreams differ and are stable") {
    Rng base(1);
    auto a = base.derive(0);
    auto b = base.derive(1);
    CHECK(a.next_u64() != b.next_u64());
    auto a2 = Rng(1).derive(0);
    a2.next_u64();  // consume the same first draw
    CHECK(Rng(1).derive(0).next_u64() == Rng(1).derive(0).next_u64());
}
