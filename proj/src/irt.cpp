#include "anaquest/irt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

#include "anaquest/csv.hpp"

namespace anaquest::irt {

namespace {

inline double log_sigmoid(double x) {
    if (x >= 0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

}  // namespace

// --- ResponseMatrix ---

ResponseMatrix::ResponseMatrix(std::vector<std::string> student_ids,
                               std::vector<std::string> item_ids)
    : student_ids_(std::move(student_ids)),
      item_ids_(std::move(item_ids)),
      cells_(student_ids_.size() * item_ids_.size(), kMissing) {}

void ResponseMatrix::set(std::size_t student, std::size_t item, int value) {
    if (value != 0 && value != 1 && value != kMissing)
        throw std::invalid_argument("ResponseMatrix::set: value must be 0, 1 or missing");
    cells_[student * item_ids_.size() + item] = static_cast<std::int8_t>(value);
}

int ResponseMatrix::at(std::size_t student, std::size_t item) const {
    return cells_[student * item_ids_.size() + item];
}

void ResponseMatrix::validate() const {
    if (n_items() < 2) throw std::invalid_argument("response matrix: need >= 2 items");
    std::size_t students_with_data = 0;
    std::set<std::size_t> items_with_data;
    for (std::size_t s = 0; s < n_students(); ++s) {
        std::size_t count = 0;
        for (std::size_t i = 0; i < n_items(); ++i) {
            if (at(s, i) != kMissing) {
                ++count;
                items_with_data.insert(i);
            }
        }
        if (count == 0)
            throw std::invalid_argument("response matrix: student '" + student_ids_[s] +
                                        "' has no non-missing cells");
        ++students_with_data;
    }
    if (students_with_data < 2)
        throw std::invalid_argument("response matrix: need >= 2 students with data");
    if (items_with_data.size() < 2)
        throw std::invalid_argument("response matrix: need >= 2 items with data");
}

ResponseMatrix ResponseMatrix::read_csv(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    if (t.header.empty() || t.header[0] != "student_id")
        throw std::runtime_error(path + ": first column must be student_id");
    std::vector<std::string> items(t.header.begin() + 1, t.header.end());
    std::vector<std::string> students;
    students.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) students.push_back(t.cell(r, 0));

    ResponseMatrix m(std::move(students), std::move(items));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (std::size_t i = 0; i < m.n_items(); ++i) {
            const std::string& cell = t.cell(r, static_cast<int>(i + 1));
            if (cell == "NA") {
                m.set(r, i, kMissing);
            } else if (cell == "0") {
                m.set(r, i, 0);
            } else if (cell == "1") {
                m.set(r, i, 1);
            } else {
                throw std::runtime_error(path + ":" + std::to_string(t.line_of_row(r)) +
                                         ": column '" + m.item_ids()[i] +
                                         "': expected 0, 1 or NA, got '" + cell + "'");
            }
        }
    }
    return m;
}

std::string ResponseMatrix::format_csv() const {
    std::vector<std::string> header{"student_id"};
    header.insert(header.end(), item_ids_.begin(), item_ids_.end());
    std::string out = csv::format_row(header);
    for (std::size_t s = 0; s < n_students(); ++s) {
        std::vector<std::string> row{student_ids_[s]};
        for (std::size_t i = 0; i < n_items(); ++i) {
            const int v = at(s, i);
            row.push_back(v == kMissing ? "NA" : (v ? "1" : "0"));
        }
        out += csv::format_row(row);
    }
    return out;
}

// --- quadrature ---

QuadratureScheme QuadratureScheme::normal_grid(int n, double span) {
    if (n < 2 || span <= 0)
        throw std::invalid_argument("QuadratureScheme::normal_grid: bad arguments");
    QuadratureScheme q;
    q.nodes.resize(static_cast<std::size_t>(n));
    q.weights.resize(static_cast<std::size_t>(n));
    double total = 0;
    for (int i = 0; i < n; ++i) {
        const double x = -span + 2.0 * span * static_cast<double>(i) / static_cast<double>(n - 1);
        q.nodes[static_cast<std::size_t>(i)] = x;
        const double w = stats::norm_pdf(x);
        q.weights[static_cast<std::size_t>(i)] = w;
        total += w;
    }
    for (auto& w : q.weights) w /= total;
    return q;
}

void QuadratureScheme::validate() const {
    if (nodes.size() != weights.size() || nodes.size() < 2)
        throw std::invalid_argument("quadrature: need matching nodes/weights, >= 2 points");
    double total = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i > 0 && nodes[i] <= nodes[i - 1])
            throw std::invalid_argument("quadrature: nodes must be strictly increasing");
        if (weights[i] <= 0) throw std::invalid_argument("quadrature: weights must be positive");
        total += weights[i];
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw std::invalid_argument("quadrature: weights must sum to 1");
}

// --- penalized weighted Bernoulli objective ---

double pl2_objective(const std::vector<double>& t, const std::vector<double>& r,
                     const std::vector<double>& n, double ridge, double alpha, double beta) {
    double obj = 0, total_n = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double eta = alpha * (t[k] - beta);
        obj += r[k] * log_sigmoid(eta) + (n[k] - r[k]) * log_sigmoid(-eta);
        total_n += n[k];
    }
    return obj - 0.5 * ridge * total_n * (alpha * alpha + beta * beta);
}

std::array<double, 2> pl2_gradient(const std::vector<double>& t, const std::vector<double>& r,
                                   const std::vector<double>& n, double ridge, double alpha,
                                   double beta) {
    double ga = 0, sum_e = 0, total_n = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double d = t[k] - beta;
        const double p = stats::sigmoid(alpha * d);
        const double e = r[k] - n[k] * p;
        ga += e * d;
        sum_e += e;
        total_n += n[k];
    }
    const double lam = ridge * total_n;
    return {ga - lam * alpha, -alpha * sum_e - lam * beta};
}

namespace {

struct Newton2Result {
    double alpha = 1;
    double beta = 0;
    double grad_norm = 0;  // in the free parameters
    int steps = 0;
};

// Maximizes pl2_objective over (alpha, beta) by damped Newton with
// step-halving. With log_alpha the free variables are (log alpha, beta),
// which keeps discrimination positive for question-level fits.
Newton2Result maximize_pl2(const std::vector<double>& t, const std::vector<double>& r,
                           const std::vector<double>& n, double ridge, bool log_alpha,
                           double alpha0, double beta0, int max_steps, double grad_tol) {
    double total_n = 0;
    for (double v : n) total_n += v;
    const double lam = ridge * total_n;

    double alpha = alpha0, beta = beta0;
    if (log_alpha && alpha <= 0) alpha = 1e-3;

    double obj = pl2_objective(t, r, n, ridge, alpha, beta);
    Newton2Result res;
    res.alpha = alpha;
    res.beta = beta;

    for (int step = 0; step < max_steps; ++step) {
        // gradient and Hessian in (alpha, beta)
        double ga = 0, sum_e = 0, sum_v = 0, svd = 0, svd2 = 0;
        for (std::size_t k = 0; k < t.size(); ++k) {
            const double d = t[k] - beta;
            const double p = stats::sigmoid(alpha * d);
            const double e = r[k] - n[k] * p;
            const double v = n[k] * p * (1 - p);
            ga += e * d;
            sum_e += e;
            sum_v += v;
            svd += v * d;
            svd2 += v * d * d;
        }
        const double g_alpha = ga - lam * alpha;
        const double g_beta = -alpha * sum_e - lam * beta;
        const double h_aa = -svd2 - lam;
        const double h_ab = alpha * svd - sum_e;
        const double h_bb = -alpha * alpha * sum_v - lam;

        double g0, g1, H00, H01, H11;
        if (log_alpha) {
            g0 = alpha * g_alpha;
            g1 = g_beta;
            H00 = alpha * alpha * h_aa + alpha * g_alpha;
            H01 = alpha * h_ab;
            H11 = h_bb;
        } else {
            g0 = g_alpha;
            g1 = g_beta;
            H00 = h_aa;
            H01 = h_ab;
            H11 = h_bb;
        }

        res.grad_norm = std::sqrt(g0 * g0 + g1 * g1);
        res.steps = step;
        if (res.grad_norm <= grad_tol) break;

        // dampen until negative definite
        double tau = 0;
        double scale = 1e-6 * (1 + std::fabs(H00) + std::fabs(H11));
        while (!(H00 - tau < 0 && (H00 - tau) * (H11 - tau) - H01 * H01 > 0)) {
            tau = tau == 0 ? scale : tau * 10;
            if (tau > 1e12) break;
        }
        const double a00 = H00 - tau, a11 = H11 - tau;
        const double det = a00 * a11 - H01 * H01;
        if (det <= 0) break;  // damping exhausted, no usable curvature
        double d0 = -(a11 * g0 - H01 * g1) / det;
        double d1 = -(a00 * g1 - H01 * g0) / det;

        // step-halving on the penalized objective
        double stepsize = 1.0;
        bool accepted = false;
        for (int h = 0; h < 30; ++h) {
            double na, nb;
            if (log_alpha) {
                double a_free = std::log(alpha) + stepsize * d0;
                a_free = std::clamp(a_free, -10.0, 5.0);
                na = std::exp(a_free);
            } else {
                na = alpha + stepsize * d0;
                na = std::clamp(na, -150.0, 150.0);
            }
            nb = std::clamp(beta + stepsize * d1, -75.0, 75.0);
            const double nobj = pl2_objective(t, r, n, ridge, na, nb);
            if (nobj > obj) {
                alpha = na;
                beta = nb;
                obj = nobj;
                accepted = true;
                break;
            }
            stepsize *= 0.5;
        }
        res.alpha = alpha;
        res.beta = beta;
        if (!accepted) break;  // no ascent left at this scale
    }

    // report the exact gradient at the returned point
    const auto g = pl2_gradient(t, r, n, ridge, res.alpha, res.beta);
    if (log_alpha) {
        res.grad_norm = std::sqrt(res.alpha * g[0] * res.alpha * g[0] + g[1] * g[1]);
    } else {
        res.grad_norm = std::sqrt(g[0] * g[0] + g[1] * g[1]);
    }
    return res;
}

struct ObservedCell {
    int item;
    std::int8_t response;
};

struct EStepAccum {
    std::vector<double> r;  // expected successes, item-major [item * nQ + q]
    std::vector<double> n;  // expected trials
    double ll = 0;
};

void estep_range(std::size_t begin, std::size_t end,
                 const std::vector<std::vector<ObservedCell>>& obs,
                 const std::vector<double>& log_p, const std::vector<double>& log_1mp,
                 const std::vector<double>& log_w, std::size_t n_quad, EStepAccum& acc) {
    std::vector<double> logl(n_quad);
    std::vector<double> post(n_quad);
    for (std::size_t s = begin; s < end; ++s) {
        for (std::size_t q = 0; q < n_quad; ++q) logl[q] = log_w[q];
        for (const auto& cell : obs[s]) {
            const double* row = cell.response
                                    ? &log_p[static_cast<std::size_t>(cell.item) * n_quad]
                                    : &log_1mp[static_cast<std::size_t>(cell.item) * n_quad];
            for (std::size_t q = 0; q < n_quad; ++q) logl[q] += row[q];
        }
        double maxv = -std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < n_quad; ++q) maxv = std::max(maxv, logl[q]);
        double total = 0;
        for (std::size_t q = 0; q < n_quad; ++q) {
            post[q] = std::exp(logl[q] - maxv);
            total += post[q];
        }
        acc.ll += maxv + std::log(total);
        const double inv = 1.0 / total;
        for (std::size_t q = 0; q < n_quad; ++q) post[q] *= inv;

        for (const auto& cell : obs[s]) {
            double* nrow = &acc.n[static_cast<std::size_t>(cell.item) * n_quad];
            for (std::size_t q = 0; q < n_quad; ++q) nrow[q] += post[q];
            if (cell.response) {
                double* rrow = &acc.r[static_cast<std::size_t>(cell.item) * n_quad];
                for (std::size_t q = 0; q < n_quad; ++q) rrow[q] += post[q];
            }
        }
    }
}

}  // namespace

FitResult fit_2pl_mml(const ResponseMatrix& m, const QuadratureScheme& quad,
                      const FitOptions& opts) {
    m.validate();
    quad.validate();

    const std::size_t n_students = m.n_students();
    const std::size_t n_all_items = m.n_items();
    const std::size_t n_quad = quad.nodes.size();

    FitResult result;

    // exclude items whose observed responses are all 0 or all 1
    std::vector<int> active;  // active index -> matrix item index
    std::vector<double> item_obs_count;
    for (std::size_t i = 0; i < n_all_items; ++i) {
        std::size_t zeros = 0, ones = 0;
        for (std::size_t s = 0; s < n_students; ++s) {
            const int v = m.at(s, i);
            if (v == 0) ++zeros;
            if (v == 1) ++ones;
        }
        if (zeros == 0 || ones == 0) {
            result.report.excluded_items.push_back(m.item_ids()[i]);
            result.report.notes.push_back("item '" + m.item_ids()[i] +
                                          "' excluded: responses are degenerate (all " +
                                          (ones ? "1" : "0") + " or empty)");
        } else {
            active.push_back(static_cast<int>(i));
            item_obs_count.push_back(static_cast<double>(zeros + ones));
        }
    }
    const std::size_t n_items = active.size();
    if (n_items < 2)
        throw std::invalid_argument("fit_2pl_mml: fewer than 2 non-degenerate items");

    // per-student observed cells over active items
    std::vector<std::vector<ObservedCell>> obs(n_students);
    for (std::size_t s = 0; s < n_students; ++s) {
        for (std::size_t a = 0; a < n_items; ++a) {
            const int v = m.at(s, static_cast<std::size_t>(active[a]));
            if (v != ResponseMatrix::kMissing)
                obs[s].push_back(ObservedCell{static_cast<int>(a), static_cast<std::int8_t>(v)});
        }
    }

    std::vector<double> log_w(n_quad);
    for (std::size_t q = 0; q < n_quad; ++q) log_w[q] = std::log(quad.weights[q]);

    std::vector<double> alpha(n_items, 1.0), beta(n_items, 0.0);
    std::vector<double> log_p(n_items * n_quad), log_1mp(n_items * n_quad);
    std::vector<double> last_grad_norm(n_items, 0.0);

    const auto penalty = [&] {
        double p = 0;
        for (std::size_t a = 0; a < n_items; ++a)
            p += 0.5 * opts.ridge * item_obs_count[a] *
                 (alpha[a] * alpha[a] + beta[a] * beta[a]);
        return p;
    };

    const int threads = std::max(1, opts.threads);
    EStepAccum merged;
    merged.r.assign(n_items * n_quad, 0.0);
    merged.n.assign(n_items * n_quad, 0.0);

    const auto run_estep = [&] {
        // refresh probability tables
        for (std::size_t a = 0; a < n_items; ++a) {
            for (std::size_t q = 0; q < n_quad; ++q) {
                const double eta = alpha[a] * (quad.nodes[q] - beta[a]);
                log_p[a * n_quad + q] = log_sigmoid(eta);
                log_1mp[a * n_quad + q] = log_sigmoid(-eta);
            }
        }
        std::fill(merged.r.begin(), merged.r.end(), 0.0);
        std::fill(merged.n.begin(), merged.n.end(), 0.0);
        merged.ll = 0;
        if (threads == 1) {
            estep_range(0, n_students, obs, log_p, log_1mp, log_w, n_quad, merged);
            return;
        }
        // fixed contiguous chunks merged in chunk order, so results are
        // deterministic for a given thread count
        std::vector<EStepAccum> parts(static_cast<std::size_t>(threads));
        std::vector<std::thread> pool;
        const std::size_t chunk = (n_students + static_cast<std::size_t>(threads) - 1) /
                                  static_cast<std::size_t>(threads);
        for (int ti = 0; ti < threads; ++ti) {
            auto& part = parts[static_cast<std::size_t>(ti)];
            part.r.assign(n_items * n_quad, 0.0);
            part.n.assign(n_items * n_quad, 0.0);
            const std::size_t b = std::min(n_students, static_cast<std::size_t>(ti) * chunk);
            const std::size_t e = std::min(n_students, b + chunk);
            pool.emplace_back(estep_range, b, e, std::cref(obs), std::cref(log_p),
                              std::cref(log_1mp), std::cref(log_w), n_quad, std::ref(part));
        }
        for (auto& th : pool) th.join();
        for (const auto& part : parts) {
            merged.ll += part.ll;
            for (std::size_t k = 0; k < merged.r.size(); ++k) {
                merged.r[k] += part.r[k];
                merged.n[k] += part.n[k];
            }
        }
    };

    bool converged = false;
    int iterations = 0;
    std::vector<double> rq(n_quad), nq(n_quad);
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        iterations = iter + 1;
        run_estep();
        result.report.objective_trace.push_back(merged.ll - penalty());

        double max_change = 0;
        for (std::size_t a = 0; a < n_items; ++a) {
            for (std::size_t q = 0; q < n_quad; ++q) {
                rq[q] = merged.r[a * n_quad + q];
                nq[q] = merged.n[a * n_quad + q];
            }
            const auto res = maximize_pl2(quad.nodes, rq, nq, opts.ridge, /*log_alpha=*/true,
                                          alpha[a], beta[a], opts.newton_cap, 1e-10);
            max_change = std::max(max_change, std::fabs(res.alpha - alpha[a]));
            max_change = std::max(max_change, std::fabs(res.beta - beta[a]));
            alpha[a] = res.alpha;
            beta[a] = res.beta;
            last_grad_norm[a] = res.grad_norm;
        }
        if (max_change < opts.tol) {
            converged = true;
            break;
        }
    }

    // objective at the returned parameters
    run_estep();
    result.report.objective_trace.push_back(merged.ll - penalty());
    result.report.converged = converged;
    result.report.iterations = iterations;
    if (!converged)
        result.report.notes.push_back("EM did not reach tol " + std::to_string(opts.tol) +
                                      " within " + std::to_string(opts.max_iterations) +
                                      " iterations; returning last iterate");

    for (std::size_t a = 0; a < n_items; ++a) {
        ItemFit fit;
        fit.params.item_id = m.item_ids()[static_cast<std::size_t>(active[a])];
        fit.params.alpha = alpha[a];
        fit.params.beta = beta[a];
        fit.grad_norm = last_grad_norm[a];

        // posterior-flat check: expected-count likelihood ratio of the fit
        // against the best constant-probability model
        double ll_fit = 0, R = 0, N = 0;
        for (std::size_t q = 0; q < n_quad; ++q) {
            const double r = merged.r[a * n_quad + q];
            const double n = merged.n[a * n_quad + q];
            const double eta = alpha[a] * (quad.nodes[q] - beta[a]);
            ll_fit += r * log_sigmoid(eta) + (n - r) * log_sigmoid(-eta);
            R += r;
            N += n;
        }
        const double pbar = R / N;
        const double ll_const = R * std::log(pbar) + (N - R) * std::log(1 - pbar);
        const double lr = std::max(0.0, 2.0 * (ll_fit - ll_const));
        if (lr < opts.degenerate_lr) fit.flags.push_back("near_degenerate");
        if (!converged) fit.flags.push_back("not_converged");
        result.items.push_back(std::move(fit));
    }
    return result;
}

AbilityEstimates eap_abilities(const ResponseMatrix& m, const std::vector<ItemParameters>& params,
                               const QuadratureScheme& quad) {
    quad.validate();
    std::map<std::string, const ItemParameters*> by_id;
    for (const auto& p : params) by_id[p.item_id] = &p;

    const std::size_t n_quad = quad.nodes.size();
    std::vector<const ItemParameters*> item_params(m.n_items(), nullptr);
    for (std::size_t i = 0; i < m.n_items(); ++i) {
        const auto it = by_id.find(m.item_ids()[i]);
        if (it == by_id.end())
            throw std::invalid_argument("eap_abilities: no parameters for item '" +
                                        m.item_ids()[i] + "'");
        item_params[i] = it->second;
    }

    AbilityEstimates out;
    out.student_ids = m.student_ids();
    out.theta.resize(m.n_students());
    out.posterior_sd.resize(m.n_students());

    std::vector<double> logl(n_quad), post(n_quad);
    for (std::size_t s = 0; s < m.n_students(); ++s) {
        for (std::size_t q = 0; q < n_quad; ++q) logl[q] = std::log(quad.weights[q]);
        for (std::size_t i = 0; i < m.n_items(); ++i) {
            const int v = m.at(s, i);
            if (v == ResponseMatrix::kMissing) continue;
            for (std::size_t q = 0; q < n_quad; ++q) {
                const double eta = item_params[i]->alpha * (quad.nodes[q] - item_params[i]->beta);
                logl[q] += v ? log_sigmoid(eta) : log_sigmoid(-eta);
            }
        }
        double maxv = -std::numeric_limits<double>::infinity();
        for (double v : logl) maxv = std::max(maxv, v);
        double total = 0;
        for (std::size_t q = 0; q < n_quad; ++q) {
            post[q] = std::exp(logl[q] - maxv);
            total += post[q];
        }
        double mean = 0;
        for (std::size_t q = 0; q < n_quad; ++q) {
            post[q] /= total;
            mean += post[q] * quad.nodes[q];
        }
        double var = 0;
        for (std::size_t q = 0; q < n_quad; ++q) {
            const double d = quad.nodes[q] - mean;
            var += post[q] * d * d;
        }
        out.theta[s] = mean;
        out.posterior_sd[s] = std::sqrt(var);
    }
    return out;
}

OutlierSplit filter_outlier_items(const std::vector<ItemParameters>& params,
                                  const AbilityEstimates& abilities) {
    if (abilities.theta.size() < 2)
        throw std::invalid_argument("filter_outlier_items: need >= 2 students");
    const double m = stats::mean(abilities.theta);
    const double sd = stats::sample_sd(abilities.theta);
    const double lo = m - 3.0 * sd, hi = m + 3.0 * sd;

    OutlierSplit split;
    for (const auto& p : params) {
        if (p.beta < lo || p.beta > hi) {
            split.excluded.push_back(p);
        } else {
            split.kept.push_back(p);  // closed interval: exactly 3 SD stays
        }
    }
    return split;
}

namespace {

std::map<std::string, const model::AnalyticalQuestion*> question_index(
    const std::vector<model::AnalyticalQuestion>& questions) {
    std::map<std::string, const model::AnalyticalQuestion*> idx;
    for (const auto& q : questions) {
        if (!idx.emplace(q.id, &q).second)
            throw std::invalid_argument("duplicate question id '" + q.id + "'");
    }
    return idx;
}

std::vector<std::string> sorted_students(const std::vector<exam::ResponseRecord>& records) {
    std::set<std::string> s;
    for (const auto& r : records) s.insert(r.student_id);
    return {s.begin(), s.end()};
}

}  // namespace

ResponseMatrix build_question_matrix(const std::vector<model::AnalyticalQuestion>& questions,
                                     const std::vector<exam::ResponseRecord>& records) {
    const auto idx = question_index(questions);
    std::vector<std::string> item_ids;
    for (const auto& [qid, q] : idx) item_ids.push_back(qid);
    auto students = sorted_students(records);

    std::map<std::string, std::size_t> srow, icol;
    for (std::size_t i = 0; i < students.size(); ++i) srow[students[i]] = i;
    for (std::size_t i = 0; i < item_ids.size(); ++i) icol[item_ids[i]] = i;

    ResponseMatrix m(std::move(students), std::move(item_ids));
    for (const auto& rec : records) {
        const auto it = idx.find(rec.question_id);
        if (it == idx.end())
            throw std::runtime_error("build_question_matrix: unknown question id '" +
                                     rec.question_id + "'");
        const std::size_t s = srow.at(rec.student_id);
        const std::size_t i = icol.at(rec.question_id);
        if (m.at(s, i) != ResponseMatrix::kMissing)
            throw std::runtime_error("build_question_matrix: duplicate record for student '" +
                                     rec.student_id + "', question '" + rec.question_id + "'");
        const bool correct =
            !rec.choice.is_idk() && rec.choice == model::correct_option(*it->second);
        m.set(s, i, correct ? 1 : 0);
    }
    return m;
}

ResponseMatrix build_foil_matrix(const std::vector<model::AnalyticalQuestion>& questions,
                                 const std::vector<exam::ResponseRecord>& records,
                                 bool idk_as_missing) {
    const auto idx = question_index(questions);

    // items: every incorrect assertion, "<question>:<label>", sorted
    std::vector<std::string> foil_ids;
    std::map<std::string, std::vector<char>> foils_of;  // question -> foil labels
    for (const auto& [qid, q] : idx) {
        auto sorted = q->assertions;
        std::sort(sorted.begin(), sorted.end(),
                  [](const model::Assertion& a, const model::Assertion& b) {
                      return a.label < b.label;
                  });
        for (const auto& a : sorted) {
            if (!a.truth) {
                foil_ids.push_back(qid + ":" + std::string(1, a.label));
                foils_of[qid].push_back(a.label);
            }
        }
    }
    auto students = sorted_students(records);

    std::map<std::string, std::size_t> srow, icol;
    for (std::size_t i = 0; i < students.size(); ++i) srow[students[i]] = i;
    for (std::size_t i = 0; i < foil_ids.size(); ++i) icol[foil_ids[i]] = i;

    ResponseMatrix m(std::move(students), std::move(foil_ids));
    for (const auto& rec : records) {
        const auto it = foils_of.find(rec.question_id);
        if (idx.find(rec.question_id) == idx.end())
            throw std::runtime_error("build_foil_matrix: unknown question id '" +
                                     rec.question_id + "'");
        if (it == foils_of.end()) continue;  // question without foils cannot happen post-validation
        const std::size_t s = srow.at(rec.student_id);
        for (const char label : it->second) {
            const std::size_t i = icol.at(rec.question_id + ":" + std::string(1, label));
            if (rec.choice.is_idk()) {
                if (!idk_as_missing) m.set(s, i, 0);
                // missing otherwise: IDK expresses no judgment about a foil
            } else {
                m.set(s, i, rec.choice.contains(label) ? 1 : 0);
            }
        }
    }
    return m;
}

std::vector<ItemFit> fit_foils_fixed_theta(const ResponseMatrix& m,
                                           const AbilityEstimates& abilities,
                                           const FoilFitOptions& opts) {
    std::map<std::string, double> theta_of;
    for (std::size_t s = 0; s < abilities.student_ids.size(); ++s)
        theta_of[abilities.student_ids[s]] = abilities.theta[s];

    std::vector<ItemFit> out;
    out.reserve(m.n_items());
    std::vector<double> t, x, n;
    for (std::size_t i = 0; i < m.n_items(); ++i) {
        t.clear();
        x.clear();
        n.clear();
        for (std::size_t s = 0; s < m.n_students(); ++s) {
            const int v = m.at(s, i);
            if (v == ResponseMatrix::kMissing) continue;
            const auto it = theta_of.find(m.student_ids()[s]);
            if (it == theta_of.end())
                throw std::invalid_argument("fit_foils_fixed_theta: no ability for student '" +
                                            m.student_ids()[s] + "'");
            t.push_back(it->second);
            x.push_back(static_cast<double>(v));
            n.push_back(1.0);
        }

        ItemFit fit;
        fit.params.item_id = m.item_ids()[i];
        if (t.empty()) {
            fit.params.alpha = 0;
            fit.params.beta = 0;
            fit.flags.push_back("no_responses");
            out.push_back(std::move(fit));
            continue;
        }

        double ones = 0;
        for (double v : x) ones += v;
        const bool constant = (ones == 0 || ones == static_cast<double>(x.size()));
        if (constant) fit.flags.push_back("constant_responses");

        // complete separation on theta: a threshold splits the two classes
        if (!constant) {
            double max0 = -1e300, min0 = 1e300, max1 = -1e300, min1 = 1e300;
            for (std::size_t k = 0; k < t.size(); ++k) {
                if (x[k] > 0.5) {
                    max1 = std::max(max1, t[k]);
                    min1 = std::min(min1, t[k]);
                } else {
                    max0 = std::max(max0, t[k]);
                    min0 = std::min(min0, t[k]);
                }
            }
            if (max1 < min0 || max0 < min1) fit.flags.push_back("separated");
        }

        // slope-intercept logistic regression (concave) for the start point
        double slope = 0, intercept = 0;
        for (int it2 = 0; it2 < 25; ++it2) {
            double g_s = 0, g_c = 0, w_tt = 0, w_t = 0, w_1 = 0;
            for (std::size_t k = 0; k < t.size(); ++k) {
                const double p = stats::sigmoid(slope * t[k] + intercept);
                const double e = x[k] - p;
                const double w = std::max(p * (1 - p), 1e-10);
                g_s += e * t[k];
                g_c += e;
                w_tt += w * t[k] * t[k];
                w_t += w * t[k];
                w_1 += w;
            }
            const double lam0 = 1e-6 * static_cast<double>(t.size());
            g_s -= lam0 * slope;
            g_c -= lam0 * intercept;
            const double a00 = w_tt + lam0, a01 = w_t, a11 = w_1 + lam0;
            const double det = a00 * a11 - a01 * a01;
            if (det <= 0) break;
            const double ds = (a11 * g_s - a01 * g_c) / det;
            const double dc = (a00 * g_c - a01 * g_s) / det;
            slope += ds;
            intercept += dc;
            if (std::fabs(ds) + std::fabs(dc) < 1e-10) break;
        }
        double alpha0 = slope;
        double beta0 = std::fabs(slope) > 1e-6 ? -intercept / slope : 0.0;
        beta0 = std::clamp(beta0, -50.0, 50.0);
        if (alpha0 == 0) alpha0 = 1e-3;

        const auto res = maximize_pl2(t, x, n, opts.ridge, /*log_alpha=*/false, alpha0, beta0,
                                      opts.max_steps, opts.grad_tol);
        fit.params.alpha = res.alpha;
        fit.params.beta = res.beta;
        fit.grad_norm = res.grad_norm;
        if (res.grad_norm > 1e-6) fit.flags.push_back("not_converged");
        out.push_back(std::move(fit));
    }
    return out;
}

std::map<model::Source, MeanCurve> mean_source_curve(
    const std::map<model::Source, std::vector<ItemParameters>>& by_source) {
    std::map<model::Source, MeanCurve> out;
    for (const auto& [source, items] : by_source) {
        if (items.empty())
            throw std::invalid_argument("mean_source_curve: empty group for source " +
                                        model::to_string(source));
        MeanCurve c;
        for (const auto& p : items) {
            c.alpha += p.alpha;
            c.beta += p.beta;
        }
        c.alpha /= static_cast<double>(items.size());
        c.beta /= static_cast<double>(items.size());
        out[source] = c;
    }
    return out;
}

std::string format_params_csv(const std::vector<SourcedItem>& items) {
    std::string out = "item_id,source,level,alpha,beta,flags\n";
    for (const auto& it : items) {
        out += csv::format_row({it.item_id, it.source, it.level, csv::format_double(it.alpha),
                                csv::format_double(it.beta), it.flags});
    }
    return out;
}

std::vector<SourcedItem> read_params_csv(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    const int c_id = t.require_column("item_id");
    const int c_source = t.require_column("source");
    const int c_level = t.require_column("level");
    const int c_alpha = t.require_column("alpha");
    const int c_beta = t.require_column("beta");
    const int c_flags = t.column("flags");

    std::vector<SourcedItem> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        SourcedItem it;
        it.item_id = t.cell(r, c_id);
        it.source = t.cell(r, c_source);
        it.level = t.cell(r, c_level);
        it.alpha = t.cell_double(r, c_alpha);
        it.beta = t.cell_double(r, c_beta);
        if (c_flags >= 0) it.flags = t.cell(r, c_flags);
        if (it.level != "question" && it.level != "foil")
            throw std::runtime_error(path + ":" + std::to_string(t.line_of_row(r)) +
                                     ": column 'level': expected question or foil, got '" +
                                     it.level + "'");
        out.push_back(std::move(it));
    }
    return out;
}

std::string format_abilities_csv(const AbilityEstimates& abilities) {
    std::string out = "student_id,theta,posterior_sd\n";
    for (std::size_t s = 0; s < abilities.student_ids.size(); ++s) {
        out += csv::format_row({abilities.student_ids[s], csv::format_double(abilities.theta[s]),
                                csv::format_double(abilities.posterior_sd[s])});
    }
    return out;
}

AbilityEstimates read_abilities_csv(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    const int c_id = t.require_column("student_id");
    const int c_theta = t.require_column("theta");
    const int c_sd = t.column("posterior_sd");

    AbilityEstimates out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        out.student_ids.push_back(t.cell(r, c_id));
        out.theta.push_back(t.cell_double(r, c_theta));
        out.posterior_sd.push_back(c_sd >= 0 ? t.cell_double(r, c_sd) : 0.0);
    }
    return out;
}

}  // namespace anaquest::irt
