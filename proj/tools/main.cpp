// anaquest: generate analytical MCQs from formative-assessment data, build
// counterbalanced exams, score them, fit 2PL item/foil parameters, and
// compare sources by KDE/KL-divergence proximity.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "anaquest/exam.hpp"
#include "anaquest/generation.hpp"
#include "anaquest/irt.hpp"
#include "anaquest/manifest.hpp"
#include "anaquest/model.hpp"
#include "anaquest/proximity.hpp"
#include "anaquest/simulator.hpp"
#include "anaquest/survey.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace anaquest;

namespace {

struct Config {
    gen::ClientConfig client;
    std::string course_phrase = gen::default_course_phrase();
    std::string few_shot_path;
    int token_budget = 0;
    irt::FitOptions estimation;
    bool idk_as_missing = true;
    int grid_resolution = 128;
    std::optional<double> bandwidth_alpha, bandwidth_beta;
    prox::IccExportOptions icc;
    json raw = json::object();  // effective snapshot for manifests
};

Config load_config(const std::string& path) {
    Config cfg;
    json j = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error(path + ": cannot open config");
        in >> j;
    }
    const json client = j.value("client", json::object());
    cfg.client.endpoint = client.value("endpoint", "");
    cfg.client.model = client.value("model", "");
    cfg.client.api_key_env = client.value("api_key_env", "OPENAI_API_KEY");
    cfg.client.max_retries = client.value("max_retries", 3);
    cfg.client.backoff_ms = client.value("backoff_ms", 250);
    cfg.client.fixed_timestamp = client.value("fixed_timestamp", "");
    cfg.client.mock_replies_path = client.value("mock_replies", "");

    const json generation = j.value("generation", json::object());
    cfg.course_phrase = generation.value("course_phrase", cfg.course_phrase);
    cfg.few_shot_path = generation.value("few_shot", "");
    cfg.token_budget = generation.value("token_budget", 0);

    const json estimation = j.value("estimation", json::object());
    cfg.estimation.tol = estimation.value("tol", 1e-4);
    cfg.estimation.max_iterations = estimation.value("max_iterations", 500);
    cfg.estimation.newton_cap = estimation.value("newton_cap", 25);
    cfg.estimation.ridge = estimation.value("ridge", 1e-3);
    cfg.estimation.degenerate_lr = estimation.value("degenerate_lr", 3.84);
    cfg.estimation.threads = estimation.value("threads", 1);
    cfg.idk_as_missing = estimation.value("idk_as_missing", true);

    const json proximity = j.value("proximity", json::object());
    cfg.grid_resolution = proximity.value("grid_resolution", 128);
    if (proximity.contains("bandwidth_alpha") && !proximity["bandwidth_alpha"].is_null())
        cfg.bandwidth_alpha = proximity["bandwidth_alpha"].get<double>();
    if (proximity.contains("bandwidth_beta") && !proximity["bandwidth_beta"].is_null())
        cfg.bandwidth_beta = proximity["bandwidth_beta"].get<double>();
    cfg.icc.curve_points = proximity.value("curve_points", 201);
    cfg.icc.span_sd = proximity.value("span_sd", 4.0);
    cfg.icc.hist_bins = proximity.value("hist_bins", 20);

    cfg.raw = {{"client",
                {{"endpoint", cfg.client.endpoint},
                 {"model", cfg.client.model},
                 {"api_key_env", cfg.client.api_key_env},
                 {"max_retries", cfg.client.max_retries},
                 {"backoff_ms", cfg.client.backoff_ms},
                 {"fixed_timestamp", cfg.client.fixed_timestamp},
                 {"mock_replies", cfg.client.mock_replies_path}}},
               {"generation",
                {{"course_phrase", cfg.course_phrase},
                 {"few_shot", cfg.few_shot_path},
                 {"token_budget", cfg.token_budget}}},
               {"estimation",
                {{"tol", cfg.estimation.tol},
                 {"max_iterations", cfg.estimation.max_iterations},
                 {"newton_cap", cfg.estimation.newton_cap},
                 {"ridge", cfg.estimation.ridge},
                 {"degenerate_lr", cfg.estimation.degenerate_lr},
                 {"threads", cfg.estimation.threads},
                 {"idk_as_missing", cfg.idk_as_missing}}},
               {"proximity",
                {{"grid_resolution", cfg.grid_resolution},
                 {"bandwidth_alpha", cfg.bandwidth_alpha ? json(*cfg.bandwidth_alpha) : json()},
                 {"bandwidth_beta", cfg.bandwidth_beta ? json(*cfg.bandwidth_beta) : json()},
                 {"curve_points", cfg.icc.curve_points},
                 {"span_sd", cfg.icc.span_sd},
                 {"hist_bins", cfg.icc.hist_bins}}}};
    return cfg;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return j;
}

std::vector<model::Topic> load_topics(const std::string& path) {
    const json j = load_json_file(path);
    if (!j.is_array()) throw std::runtime_error(path + ": expected a JSON array of topics");
    std::vector<model::Topic> topics;
    for (const auto& tj : j) topics.push_back(model::topic_from_json(tj));
    return topics;
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::map<std::string, std::string>& inputs, const Config& cfg,
                    std::uint64_t seed) {
    const auto manifest = make_manifest(command, inputs, cfg.raw, seed);
    atomic_write((fs::path(out_dir) / ("manifest_" + command + ".json")).string(),
                 manifest.dump(2) + "\n");
}

void ensure_out(const std::string& out_dir) { fs::create_directories(out_dir); }

std::string join_flags(const std::vector<std::string>& flags) {
    std::string out;
    for (const auto& f : flags) {
        if (!out.empty()) out += ";";
        out += f;
    }
    return out;
}

// ----- generate -----

int cmd_generate(const Config& cfg, const std::string& topics_path,
                 const std::string& responses_path, const std::string& mode_name,
                 const std::string& out_dir) {
    const gen::Mode mode = mode_name == "anaquest" ? gen::Mode::AnaQuest : gen::Mode::Baseline;
    const auto topics = load_topics(topics_path);
    ensure_out(out_dir);

    std::vector<gen::FormativeResponse> all_responses;
    std::vector<gen::FewShotExample> few_shot;
    if (mode == gen::Mode::AnaQuest) {
        if (responses_path.empty())
            throw std::runtime_error("anaquest mode requires --responses");
        all_responses = gen::load_formative(responses_path);
        few_shot = cfg.few_shot_path.empty()
                       ? gen::default_few_shot()
                       : gen::few_shot_from_json(load_json_file(cfg.few_shot_path));
    }

    auto client = gen::make_client(cfg.client);
    gen::AuditLog audit((fs::path(out_dir) / "audit.log").string(), cfg.client.fixed_timestamp);
    gen::RetryPolicy policy{cfg.client.max_retries, cfg.client.backoff_ms};

    std::vector<std::string> failed;
    for (const auto& topic : topics) {
        try {
            std::string prompt_text;
            if (mode == gen::Mode::AnaQuest) {
                gen::GenerationRequest req;
                req.topic = topic;
                req.mode = mode;
                req.few_shot = few_shot;
                req.token_budget = cfg.token_budget;
                for (const auto& r : all_responses) {
                    if (r.topic_id == topic.id) req.responses.push_back(r);
                }
                const auto prompt = gen::build_anaquest_prompt(req);
                for (const auto& w : prompt.warnings)
                    std::cerr << "warning: topic " << topic.id << ": " << w << "\n";
                prompt_text = prompt.text;
            } else {
                prompt_text = gen::build_baseline_prompt(topic, cfg.course_phrase);
            }
            const auto reply = gen::complete(*client, prompt_text, policy, &audit, topic.id, mode);
            const auto pool = gen::parse_candidate_pool(
                reply, topic.id,
                mode == gen::Mode::AnaQuest ? model::Source::AnaQuest : model::Source::Baseline);
            atomic_write((fs::path(out_dir) / ("pool_" + topic.id + ".json")).string(),
                         gen::pool_to_json(pool).dump(2) + "\n");
        } catch (const std::exception& e) {
            std::cerr << "topic " << topic.id << " failed: " << e.what() << "\n";
            failed.push_back(topic.id);
        }
    }

    std::map<std::string, std::string> inputs{{"topics", topics_path}};
    if (!responses_path.empty()) inputs["responses"] = responses_path;
    write_manifest(out_dir, "generate", inputs, cfg, 0);

    if (!failed.empty()) {
        std::cerr << "generate: " << failed.size() << " topic(s) failed:";
        for (const auto& t : failed) std::cerr << " " << t;
        std::cerr << "\n";
        return 1;
    }
    return 0;
}

// ----- curate -----

int cmd_curate(const Config& cfg, const std::string& pools_dir, const std::string& selections_path,
               const std::string& topics_path, const std::string& out_dir) {
    const auto topics = load_topics(topics_path);
    std::map<std::string, model::Topic> topic_by_id;
    for (const auto& t : topics) topic_by_id[t.id] = t;

    const json selections = load_json_file(selections_path);
    if (!selections.is_array())
        throw std::runtime_error(selections_path + ": expected a JSON array of selections");

    std::vector<model::AnalyticalQuestion> questions;
    for (const auto& sel : selections) {
        const std::string topic_id = sel.at("topic_id").get<std::string>();
        const std::string question_id = sel.at("question_id").get<std::string>();
        const auto it = topic_by_id.find(topic_id);
        if (it == topic_by_id.end())
            throw std::runtime_error(selections_path + ": unknown topic '" + topic_id + "'");

        const auto pool =
            gen::load_pool((fs::path(pools_dir) / ("pool_" + topic_id + ".json")).string());
        std::vector<gen::Pick> picks;
        for (const auto& pj : sel.at("picks")) {
            const std::string group = pj.at("group").get<std::string>();
            if (group != "correct" && group != "incorrect")
                throw std::runtime_error(selections_path + ": pick group must be correct or "
                                         "incorrect, got '" + group + "'");
            picks.push_back(gen::Pick{group == "correct", pj.at("index").get<int>()});
        }
        questions.push_back(gen::select_assertions(pool, it->second, question_id, picks));
    }

    ensure_out(out_dir);
    atomic_write((fs::path(out_dir) / "questions.json").string(),
                 model::serialize_corpus(questions));
    write_manifest(out_dir, "curate",
                   {{"selections", selections_path}, {"topics", topics_path}}, cfg, 0);
    return 0;
}

// ----- assemble -----

int cmd_assemble(const Config& cfg, const std::string& corpus_path, int k, std::uint64_t seed,
                 const std::string& out_dir) {
    const auto corpus = model::load_corpus(corpus_path);
    std::vector<model::AnalyticalQuestion> human, anaquest, baseline;
    for (const auto& q : corpus) {
        switch (q.source) {
            case model::Source::Human: human.push_back(q); break;
            case model::Source::AnaQuest: anaquest.push_back(q); break;
            case model::Source::Baseline: baseline.push_back(q); break;
        }
    }
    const auto [va, vb] = exam::assemble_versions(human, anaquest, baseline, k, seed);

    ensure_out(out_dir);
    atomic_write((fs::path(out_dir) / "exam_versions.json").string(),
                 exam::versions_to_json({va, vb}).dump(2) + "\n");
    atomic_write((fs::path(out_dir) / "exam_export.json").string(),
                 exam::exam_export_json({va, vb}).dump(2) + "\n");
    write_manifest(out_dir, "assemble", {{"corpus", corpus_path}}, cfg, seed);
    return 0;
}

// ----- score -----

int cmd_score(const Config& cfg, const std::string& corpus_path, const std::string& responses_path,
              const std::string& out_dir) {
    const auto corpus = model::load_corpus(corpus_path);
    std::map<std::string, model::AnalyticalQuestion> by_id;
    for (const auto& q : corpus) by_id[q.id] = q;

    const auto records = exam::read_responses_csv(responses_path);
    if (records.empty()) throw std::runtime_error(responses_path + ": no records");

    std::map<std::string, char> version_of;
    for (const auto& r : records) {
        const auto [it, inserted] = version_of.emplace(r.student_id, r.version_id);
        if (!inserted && it->second != r.version_id)
            throw std::runtime_error("student '" + r.student_id +
                                     "' appears in both exam versions");
        if (!by_id.count(r.question_id))
            throw std::runtime_error(responses_path + ": unknown question id '" + r.question_id +
                                     "'");
    }

    std::vector<exam::ScoredExam> scored;
    std::vector<double> ratios_a, ratios_b;
    for (const auto& [student, version] : version_of) {
        auto s = exam::score_student(by_id, student, records);
        (version == 'A' ? ratios_a : ratios_b).push_back(s.correctness_ratio);
        scored.push_back(std::move(s));
    }

    ensure_out(out_dir);
    atomic_write((fs::path(out_dir) / "scores.csv").string(), exam::format_score_report(scored));

    json equivalence;
    if (ratios_a.size() >= 2 && ratios_b.size() >= 2) {
        const auto res = exam::version_equivalence_test(ratios_a, ratios_b);
        equivalence = {{"t", res.t},
                       {"df", res.df},
                       {"p", res.p},
                       {"degenerate", res.degenerate},
                       {"n_a", ratios_a.size()},
                       {"n_b", ratios_b.size()},
                       {"mean_ratio_a", stats::mean(ratios_a)},
                       {"mean_ratio_b", stats::mean(ratios_b)}};
    } else {
        equivalence = {{"insufficient_data", true},
                       {"n_a", ratios_a.size()},
                       {"n_b", ratios_b.size()}};
    }
    atomic_write((fs::path(out_dir) / "equivalence.json").string(), equivalence.dump(2) + "\n");
    write_manifest(out_dir, "score", {{"corpus", corpus_path}, {"responses", responses_path}},
                   cfg, 0);
    return 0;
}

// ----- fit -----

int cmd_fit(const Config& cfg, const std::string& matrix_path, const std::string& responses_path,
            const std::string& corpus_path, const std::string& out_dir) {
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> source_of;  // question id -> source name
    irt::ResponseMatrix matrix;

    if (!matrix_path.empty()) {
        matrix = irt::ResponseMatrix::read_csv(matrix_path);
        inputs["matrix"] = matrix_path;
    } else {
        if (responses_path.empty() || corpus_path.empty())
            throw std::runtime_error("fit needs either --matrix or --responses with --corpus");
        const auto corpus = model::load_corpus(corpus_path);
        const auto records = exam::read_responses_csv(responses_path);
        matrix = irt::build_question_matrix(corpus, records);
        inputs["responses"] = responses_path;
    }
    if (!corpus_path.empty()) {
        const auto corpus = model::load_corpus(corpus_path);
        for (const auto& q : corpus) source_of[q.id] = model::to_string(q.source);
        inputs["corpus"] = corpus_path;
    }

    const auto quad = irt::QuadratureScheme::normal_grid();
    const auto fit = irt::fit_2pl_mml(matrix, quad, cfg.estimation);

    std::vector<irt::SourcedItem> rows;
    std::vector<irt::ItemParameters> params;
    for (const auto& f : fit.items) {
        irt::SourcedItem row;
        row.item_id = f.params.item_id;
        const auto it = source_of.find(f.params.item_id);
        row.source = it == source_of.end() ? "" : it->second;
        row.level = "question";
        row.alpha = f.params.alpha;
        row.beta = f.params.beta;
        row.flags = join_flags(f.flags);
        rows.push_back(std::move(row));
        params.push_back(f.params);
    }
    const auto abilities = irt::eap_abilities(matrix, params, quad);

    ensure_out(out_dir);
    atomic_write((fs::path(out_dir) / "question_params.csv").string(),
                 irt::format_params_csv(rows));
    atomic_write((fs::path(out_dir) / "abilities.csv").string(),
                 irt::format_abilities_csv(abilities));
    if (matrix_path.empty())
        atomic_write((fs::path(out_dir) / "question_matrix.csv").string(), matrix.format_csv());

    const json convergence = {{"converged", fit.report.converged},
                              {"iterations", fit.report.iterations},
                              {"objective_trace", fit.report.objective_trace},
                              {"excluded_items", fit.report.excluded_items},
                              {"notes", fit.report.notes}};
    atomic_write((fs::path(out_dir) / "convergence.json").string(), convergence.dump(2) + "\n");
    write_manifest(out_dir, "fit", inputs, cfg, 0);

    if (!fit.report.converged) std::cerr << "fit: EM did not converge; see convergence.json\n";
    return 0;
}

// ----- foils -----

int cmd_foils(const Config& cfg, const std::string& matrix_path,
              const std::string& responses_path, const std::string& corpus_path,
              const std::string& abilities_path, const std::string& out_dir) {
    std::map<std::string, std::string> inputs{{"abilities", abilities_path}};
    std::map<std::string, std::string> source_of;  // foil id -> source name
    irt::ResponseMatrix matrix;

    if (!matrix_path.empty()) {
        matrix = irt::ResponseMatrix::read_csv(matrix_path);
        inputs["matrix"] = matrix_path;
    } else {
        if (responses_path.empty() || corpus_path.empty())
            throw std::runtime_error("foils needs either --matrix or --responses with --corpus");
        const auto corpus = model::load_corpus(corpus_path);
        const auto records = exam::read_responses_csv(responses_path);
        matrix = irt::build_foil_matrix(corpus, records, cfg.idk_as_missing);
        inputs["responses"] = responses_path;
    }
    if (!corpus_path.empty()) {
        const auto corpus = model::load_corpus(corpus_path);
        for (const auto& q : corpus) {
            for (const auto& a : q.assertions) {
                if (!a.truth)
                    source_of[q.id + ":" + std::string(1, a.label)] = model::to_string(q.source);
            }
        }
        inputs["corpus"] = corpus_path;
    }

    const auto abilities = irt::read_abilities_csv(abilities_path);
    irt::FoilFitOptions opts;
    opts.ridge = cfg.estimation.ridge;
    const auto fits = irt::fit_foils_fixed_theta(matrix, abilities, opts);

    std::vector<irt::SourcedItem> rows;
    for (const auto& f : fits) {
        irt::SourcedItem row;
        row.item_id = f.params.item_id;
        const auto it = source_of.find(f.params.item_id);
        row.source = it == source_of.end() ? "" : it->second;
        row.level = "foil";
        row.alpha = f.params.alpha;
        row.beta = f.params.beta;
        row.flags = join_flags(f.flags);
        rows.push_back(std::move(row));
    }

    ensure_out(out_dir);
    atomic_write((fs::path(out_dir) / "foil_params.csv").string(), irt::format_params_csv(rows));
    if (matrix_path.empty())
        atomic_write((fs::path(out_dir) / "foil_matrix.csv").string(), matrix.format_csv());
    write_manifest(out_dir, "foils", inputs, cfg, 0);
    return 0;
}

// ----- compare -----

int cmd_compare(const Config& cfg, const std::string& params_path,
                const std::string& abilities_path, const std::string& level_filter,
                const std::string& out_dir) {
    const auto items = irt::read_params_csv(params_path);
    std::map<std::string, std::string> inputs{{"params", params_path}};

    std::optional<irt::AbilityEstimates> abilities;
    if (!abilities_path.empty()) {
        abilities = irt::read_abilities_csv(abilities_path);
        inputs["abilities"] = abilities_path;
    }

    std::set<std::string> levels;
    for (const auto& it : items) levels.insert(it.level);
    if (level_filter != "all") {
        if (!levels.count(level_filter))
            throw std::runtime_error("no items with level '" + level_filter + "' in " +
                                     params_path);
        levels = {level_filter};
    }

    ensure_out(out_dir);
    for (const auto& level : levels) {
        std::map<model::Source, std::vector<irt::ItemParameters>> by_source;
        for (const auto& it : items) {
            if (it.level != level) continue;
            if (it.flags.find("no_responses") != std::string::npos) continue;
            if (it.source.empty())
                throw std::runtime_error(params_path + ": item '" + it.item_id +
                                         "' has no source; compare needs source labels");
            by_source[model::source_from_string(it.source)].push_back(
                irt::ItemParameters{it.item_id, it.alpha, it.beta});
        }

        // the difficulty outlier rule needs the ability distribution
        if (abilities) {
            for (auto& [source, params] : by_source)
                params = irt::filter_outlier_items(params, *abilities).kept;
        }

        std::map<model::Source, std::vector<prox::Sample>> samples;
        for (const auto& [source, params] : by_source) {
            for (const auto& p : params) samples[source].push_back({p.alpha, p.beta});
        }
        const auto report = prox::compare_sources(samples, level, cfg.grid_resolution);
        atomic_write((fs::path(out_dir) / ("proximity_" + level + ".json")).string(),
                     prox::report_to_json(report).dump(2) + "\n");

        if (abilities) {
            const auto curves = irt::mean_source_curve(by_source);
            atomic_write((fs::path(out_dir) / ("icc_" + level + ".csv")).string(),
                         prox::format_icc_figure_csv(curves, *abilities, cfg.icc));
        }
    }
    write_manifest(out_dir, "compare", inputs, cfg, 0);
    return 0;
}

// ----- simulate -----

int cmd_simulate(const Config& cfg, const std::string& scenario_path, const std::string& mode,
                 std::optional<std::uint64_t> seed_override, const std::string& out_dir) {
    auto scenario = sim::load_scenario(scenario_path);
    if (seed_override) scenario.cohort.seed = *seed_override;
    ensure_out(out_dir);

    const auto theta = sim::sample_abilities(scenario.cohort);

    if (mode == "matrix") {
        const auto matrix =
            sim::simulate_binary_responses(theta, scenario.items, scenario.cohort.seed ^ 0x5eedULL);
        atomic_write((fs::path(out_dir) / "matrix.csv").string(), matrix.format_csv());
        atomic_write((fs::path(out_dir) / "true_params.csv").string(),
                     sim::format_true_params_csv(scenario.items));
        atomic_write((fs::path(out_dir) / "true_theta.csv").string(),
                     sim::format_true_theta_csv(matrix.student_ids(), theta));
    } else if (mode == "exam") {
        const auto exam_data = sim::build_synthetic_exam(scenario);
        const exam::ExamVersion version{'A', exam_data.questions};
        const auto records = sim::simulate_exam_records(
            {version}, theta, exam_data.assertion_params, scenario.idk_prob,
            scenario.cohort.seed ^ 0x777ULL);
        atomic_write((fs::path(out_dir) / "corpus.json").string(),
                     model::serialize_corpus(exam_data.questions));
        atomic_write((fs::path(out_dir) / "responses.csv").string(),
                     exam::format_responses_csv(records));
        atomic_write((fs::path(out_dir) / "true_params.csv").string(),
                     sim::format_true_params_csv(scenario.items));
        const auto matrix = irt::build_question_matrix(exam_data.questions, records);
        atomic_write((fs::path(out_dir) / "true_theta.csv").string(),
                     sim::format_true_theta_csv(matrix.student_ids(), theta));
    } else if (mode == "recovery") {
        const auto report = sim::recovery_experiment(scenario.cohort, scenario.items,
                                                     cfg.estimation);
        atomic_write((fs::path(out_dir) / "recovery.json").string(),
                     sim::recovery_to_json(report).dump(2) + "\n");
    } else {
        throw std::runtime_error("unknown simulate mode '" + mode + "'");
    }
    write_manifest(out_dir, "simulate", {{"scenario", scenario_path}}, cfg,
                   scenario.cohort.seed);
    return 0;
}

// ----- survey -----

int cmd_survey(const Config& cfg, const std::string& ratings_path,
               const std::string& corpus_path, const std::string& out_dir) {
    const auto corpus = model::load_corpus(corpus_path);
    std::map<std::string, model::Source> source_of;
    for (const auto& q : corpus) source_of[q.id] = q.source;

    const auto ratings = survey::read_ratings_csv(ratings_path);
    const auto table = survey::aggregate_ratings(ratings, source_of);

    ensure_out(out_dir);
    atomic_write((fs::path(out_dir) / "survey_means.csv").string(),
                 survey::format_means_csv(table));
    atomic_write((fs::path(out_dir) / "survey_counts.csv").string(),
                 survey::format_counts_csv(table));
    write_manifest(out_dir, "survey", {{"ratings", ratings_path}, {"corpus", corpus_path}}, cfg,
                   0);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"analytical MCQ generation, exam assembly and IRT-based validation"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    app.add_option("--config", config_path, "JSON config file")->envname("ANAQUEST_CONFIG");

    // generate
    auto* generate = app.add_subcommand("generate", "build prompts and candidate pools per topic");
    std::string g_topics, g_responses, g_mode = "anaquest";
    generate->add_option("--topics", g_topics, "topics JSON file")->required();
    generate->add_option("--responses", g_responses, "formative responses JSON file");
    generate->add_option("--mode", g_mode, "anaquest or baseline")
        ->check(CLI::IsMember({"anaquest", "baseline"}));
    generate->add_option("--out", out_dir, "output directory")->required();

    // curate
    auto* curate = app.add_subcommand("curate", "select assertions from pools into exam questions");
    std::string c_pools, c_selections, c_topics;
    curate->add_option("--pools", c_pools, "directory of pool_<topic>.json files")->required();
    curate->add_option("--selections", c_selections, "selection spec JSON")->required();
    curate->add_option("--topics", c_topics, "topics JSON file")->required();
    curate->add_option("--out", out_dir, "output directory")->required();

    // assemble
    auto* assemble = app.add_subcommand("assemble", "build the two counterbalanced exam versions");
    std::string a_corpus;
    int a_k = 5;
    std::uint64_t a_seed = 0;
    assemble->add_option("--corpus", a_corpus, "question corpus JSON")->required();
    assemble->add_option("--k", a_k, "AI questions per source per version");
    assemble->add_option("--seed", a_seed, "topic selection seed");
    assemble->add_option("--out", out_dir, "output directory")->required();

    // score
    auto* score = app.add_subcommand("score", "score responses and test version equivalence");
    std::string s_corpus, s_responses;
    score->add_option("--corpus", s_corpus, "question corpus JSON")->required();
    score->add_option("--responses", s_responses, "responses CSV")->required();
    score->add_option("--out", out_dir, "output directory")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "fit question-level 2PL parameters and abilities");
    std::string f_matrix, f_responses, f_corpus;
    fit->add_option("--matrix", f_matrix, "response matrix CSV");
    fit->add_option("--responses", f_responses, "responses CSV (with --corpus)");
    fit->add_option("--corpus", f_corpus, "question corpus JSON");
    fit->add_option("--out", out_dir, "output directory")->required();

    // foils
    auto* foils = app.add_subcommand("foils", "fit foil-level parameters at fixed abilities");
    std::string fo_matrix, fo_responses, fo_corpus, fo_abilities;
    foils->add_option("--matrix", fo_matrix, "foil matrix CSV");
    foils->add_option("--responses", fo_responses, "responses CSV (with --corpus)");
    foils->add_option("--corpus", fo_corpus, "question corpus JSON");
    foils->add_option("--abilities", fo_abilities, "abilities CSV from fit")->required();
    foils->add_option("--out", out_dir, "output directory")->required();

    // compare
    auto* compare = app.add_subcommand("compare", "KDE/KLD proximity between sources");
    std::string cp_params, cp_abilities, cp_level = "all";
    compare->add_option("--params", cp_params, "parameter CSV from fit/foils")->required();
    compare->add_option("--abilities", cp_abilities,
                        "abilities CSV; enables outlier filtering and ICC export");
    compare->add_option("--level", cp_level, "question, foil or all")
        ->check(CLI::IsMember({"question", "foil", "all"}));
    compare->add_option("--out", out_dir, "output directory")->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "synthetic cohorts and recovery experiments");
    std::string si_scenario, si_mode = "matrix";
    std::optional<std::uint64_t> si_seed;
    simulate->add_option("--scenario", si_scenario, "scenario JSON")->required();
    simulate->add_option("--mode", si_mode, "matrix, exam or recovery")
        ->check(CLI::IsMember({"matrix", "exam", "recovery"}));
    simulate->add_option("--seed", si_seed, "override the scenario cohort seed");
    simulate->add_option("--out", out_dir, "output directory")->required();

    // survey
    auto* survey_cmd = app.add_subcommand("survey", "aggregate expert ratings per source");
    std::string sv_ratings, sv_corpus;
    survey_cmd->add_option("--ratings", sv_ratings, "ratings CSV")->required();
    survey_cmd->add_option("--corpus", sv_corpus, "question corpus JSON")->required();
    survey_cmd->add_option("--out", out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const Config cfg = load_config(config_path);
        if (generate->parsed()) return cmd_generate(cfg, g_topics, g_responses, g_mode, out_dir);
        if (curate->parsed()) return cmd_curate(cfg, c_pools, c_selections, c_topics, out_dir);
        if (assemble->parsed()) return cmd_assemble(cfg, a_corpus, a_k, a_seed, out_dir);
        if (score->parsed()) return cmd_score(cfg, s_corpus, s_responses, out_dir);
        if (fit->parsed()) return cmd_fit(cfg, f_matrix, f_responses, f_corpus, out_dir);
        if (foils->parsed())
            return cmd_foils(cfg, fo_matrix, fo_responses, fo_corpus, fo_abilities, out_dir);
        if (compare->parsed()) return cmd_compare(cfg, cp_params, cp_abilities, cp_level, out_dir);
        if (simulate->parsed()) return cmd_simulate(cfg, si_scenario, si_mode, si_seed, out_dir);
        if (survey_cmd->parsed()) return cmd_survey(cfg, sv_ratings, sv_corpus, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
