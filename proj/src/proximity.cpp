#include "anaquest/proximity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "anaquest/csv.hpp"
#include "anaquest/stats.hpp"

namespace anaquest::prox {

using model::Source;

double default_bandwidth(double sigma, std::size_t n) {
    // Scott/Silverman factor for 2 dimensions: h = sigma * n^(-1/6)
    return sigma * std::pow(static_cast<double>(n), -1.0 / 6.0);
}

namespace {

struct Moments {
    double mean_x = 0, mean_y = 0, sd_x = 0, sd_y = 0;
    double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
};

Moments moments_of(const std::vector<Sample>& samples) {
    Moments m;
    if (samples.empty()) return m;
    m.min_x = m.max_x = samples[0][0];
    m.min_y = m.max_y = samples[0][1];
    for (const auto& s : samples) {
        m.mean_x += s[0];
        m.mean_y += s[1];
        m.min_x = std::min(m.min_x, s[0]);
        m.max_x = std::max(m.max_x, s[0]);
        m.min_y = std::min(m.min_y, s[1]);
        m.max_y = std::max(m.max_y, s[1]);
    }
    const double n = static_cast<double>(samples.size());
    m.mean_x /= n;
    m.mean_y /= n;
    double vx = 0, vy = 0;
    for (const auto& s : samples) {
        vx += (s[0] - m.mean_x) * (s[0] - m.mean_x);
        vy += (s[1] - m.mean_y) * (s[1] - m.mean_y);
    }
    if (samples.size() > 1) {
        vx /= n - 1;
        vy /= n - 1;
    }
    m.sd_x = std::sqrt(vx);
    m.sd_y = std::sqrt(vy);
    return m;
}

std::pair<double, double> resolve_bandwidths(const std::vector<Sample>& samples,
                                             const KdeOptions& opts) {
    const Moments m = moments_of(samples);
    double hx, hy;
    if (opts.bandwidth_x) {
        hx = *opts.bandwidth_x;
    } else {
        if (m.sd_x == 0)
            throw std::invalid_argument(
                "kde_2d: zero variance in first coordinate; pass an explicit bandwidth");
        hx = default_bandwidth(m.sd_x, samples.size());
    }
    if (opts.bandwidth_y) {
        hy = *opts.bandwidth_y;
    } else {
        if (m.sd_y == 0)
            throw std::invalid_argument(
                "kde_2d: zero variance in second coordinate; pass an explicit bandwidth");
        hy = default_bandwidth(m.sd_y, samples.size());
    }
    if (hx <= 0 || hy <= 0) throw std::invalid_argument("kde_2d: bandwidths must be positive");
    return {hx, hy};
}

}  // namespace

Density2D kde_2d(const std::vector<Sample>& samples, const KdeOptions& opts) {
    if (samples.size() < 2 && !(opts.bandwidth_x && opts.bandwidth_y))
        throw std::invalid_argument("kde_2d: need >= 2 samples (or explicit bandwidths)");
    if (samples.empty()) throw std::invalid_argument("kde_2d: no samples");

    const auto [hx, hy] = resolve_bandwidths(samples, opts);

    Density2D density;
    density.h_x = hx;
    density.h_y = hy;
    if (opts.grid) {
        density.grid = *opts.grid;
    } else {
        const Moments m = moments_of(samples);
        const double pad = 3.0 * std::max(hx, hy);
        density.grid = GridSpec{m.min_x - pad, m.max_x + pad, m.min_y - pad, m.max_y + pad,
                                opts.resolution, opts.resolution};
    }
    const GridSpec& g = density.grid;
    if (g.nx < 2 || g.ny < 2 || g.x_max <= g.x_min || g.y_max <= g.y_min)
        throw std::invalid_argument("kde_2d: malformed grid");

    // separable kernel: accumulate the outer product of the per-axis columns
    const std::size_t nx = static_cast<std::size_t>(g.nx), ny = static_cast<std::size_t>(g.ny);
    density.values.assign(nx * ny, 0.0);
    std::vector<double> kx(nx), ky(ny);
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < nx; ++i)
            kx[i] = stats::norm_pdf((g.x_center(static_cast<int>(i)) - s[0]) / hx) / hx;
        for (std::size_t j = 0; j < ny; ++j)
            ky[j] = stats::norm_pdf((g.y_center(static_cast<int>(j)) - s[1]) / hy) / hy;
        for (std::size_t i = 0; i < nx; ++i) {
            const double kxi = kx[i];
            double* row = &density.values[i * ny];
            for (std::size_t j = 0; j < ny; ++j) row[j] += kxi * ky[j];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    for (auto& v : density.values) v *= inv_n;

    // renormalize on the grid so the discrete integral is exactly 1
    const double cell = g.dx() * g.dy();
    double total = 0;
    for (double v : density.values) total += v;
    total *= cell;
    if (total <= 0) throw std::runtime_error("kde_2d: density vanished on the grid");
    for (auto& v : density.values) v /= total;
    return density;
}

double kld(const Density2D& p, const Density2D& q) {
    if (!(p.grid == q.grid)) throw std::invalid_argument("kld: densities on different grids");
    constexpr double kFloor = 1e-12;
    const double cell = p.grid.dx() * p.grid.dy();
    double total = 0;
    for (std::size_t k = 0; k < p.values.size(); ++k) {
        const double pv = p.values[k];
        if (pv <= 0) continue;
        const double qv = std::max(q.values[k], kFloor);
        total += pv * std::log(pv / qv);
    }
    return total * cell;
}

GridSpec shared_grid(const std::map<Source, std::vector<Sample>>& samples_by_source,
                     int resolution) {
    bool first = true;
    double min_x = 0, max_x = 0, min_y = 0, max_y = 0, max_h = 0;
    for (const auto& [source, samples] : samples_by_source) {
        if (samples.size() < 2)
            throw std::invalid_argument("shared_grid: source " + model::to_string(source) +
                                        " has fewer than 2 samples");
        const Moments m = moments_of(samples);
        if (m.sd_x == 0 || m.sd_y == 0)
            throw std::invalid_argument("shared_grid: source " + model::to_string(source) +
                                        " has zero variance in a coordinate");
        max_h = std::max({max_h, default_bandwidth(m.sd_x, samples.size()),
                          default_bandwidth(m.sd_y, samples.size())});
        if (first) {
            min_x = m.min_x;
            max_x = m.max_x;
            min_y = m.min_y;
            max_y = m.max_y;
            first = false;
        } else {
            min_x = std::min(min_x, m.min_x);
            max_x = std::max(max_x, m.max_x);
            min_y = std::min(min_y, m.min_y);
            max_y = std::max(max_y, m.max_y);
        }
    }
    if (first) throw std::invalid_argument("shared_grid: no sources");
    const double pad = 3.0 * max_h;
    return GridSpec{min_x - pad, max_x + pad, min_y - pad, max_y + pad, resolution, resolution};
}

ProximityReport compare_sources(const std::map<Source, std::vector<Sample>>& by_source,
                                const std::string& level, int resolution) {
    if (by_source.size() < 2)
        throw std::invalid_argument("compare_sources: need >= 2 sources");

    ProximityReport report;
    report.level = level;
    report.grid = shared_grid(by_source, resolution);

    std::map<Source, Density2D> densities;
    for (const auto& [source, samples] : by_source) {
        KdeOptions opts;
        opts.grid = report.grid;
        densities[source] = kde_2d(samples, opts);
        report.bandwidths[source] = {densities[source].h_x, densities[source].h_y};
        report.counts[source] = static_cast<int>(samples.size());
    }

    for (const auto& [sp, dp] : densities) {
        for (const auto& [sq, dq] : densities) {
            if (sp == sq) continue;
            report.pairs.push_back(ProximityPair{sp, sq, kld(dp, dq)});
        }
    }

    // headline direction: D(Human || AI source)
    if (densities.count(Source::Human)) {
        double best = 0;
        for (const auto& pair : report.pairs) {
            if (pair.p != Source::Human) continue;
            if (!report.closest_to_human || pair.kld < best) {
                best = pair.kld;
                report.closest_to_human = pair.q;
            }
        }
    }
    return report;
}

nlohmann::json report_to_json(const ProximityReport& report) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : report.pairs) {
        pairs.push_back(nlohmann::json{{"p_source", model::to_string(p.p)},
                                       {"q_source", model::to_string(p.q)},
                                       {"kld", p.kld}});
    }
    nlohmann::json bandwidths = nlohmann::json::object();
    for (const auto& [source, h] : report.bandwidths) {
        bandwidths[model::to_string(source)] =
            nlohmann::json{{"h_alpha", h.first}, {"h_beta", h.second}};
    }
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [source, c] : report.counts) counts[model::to_string(source)] = c;

    nlohmann::json j{{"level", report.level},
                     {"pairs", pairs},
                     {"grid",
                      {{"bounds",
                        {{"alpha", {report.grid.x_min, report.grid.x_max}},
                         {"beta", {report.grid.y_min, report.grid.y_max}}}},
                       {"resolution", {report.grid.nx, report.grid.ny}}}},
                     {"bandwidths", bandwidths},
                     {"counts", counts}};
    if (report.closest_to_human)
        j["closest_to_human"] = model::to_string(*report.closest_to_human);
    return j;
}

std::string format_icc_figure_csv(const std::map<Source, irt::MeanCurve>& curves,
                                  const irt::AbilityEstimates& abilities,
                                  const IccExportOptions& opts) {
    if (curves.empty()) throw std::invalid_argument("icc figure: need >= 1 source curve");
    if (abilities.theta.empty()) throw std::invalid_argument("icc figure: no abilities");

    std::vector<std::string> header{"row_type", "theta"};
    for (const auto& [source, curve] : curves) header.push_back("p_" + model::to_string(source));
    header.insert(header.end(), {"bin_left", "bin_right", "count"});
    std::string out = csv::format_row(header);

    const double m = stats::mean(abilities.theta);
    const double sd = abilities.theta.size() > 1 ? stats::sample_sd(abilities.theta) : 1.0;
    const double lo = m - opts.span_sd * sd;
    const double hi = m + opts.span_sd * sd;

    for (int k = 0; k < opts.curve_points; ++k) {
        const double theta =
            lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(opts.curve_points - 1);
        std::vector<std::string> row{"curve", csv::format_double(theta)};
        for (const auto& [source, curve] : curves)
            row.push_back(csv::format_double(irt::icc(theta, curve.alpha, curve.beta)));
        row.insert(row.end(), {"", "", ""});
        out += csv::format_row(row);
    }

    // histogram over [min, max] so every student lands in a bin
    double min_t = abilities.theta[0], max_t = abilities.theta[0];
    for (double v : abilities.theta) {
        min_t = std::min(min_t, v);
        max_t = std::max(max_t, v);
    }
    const int bins = std::max(1, opts.hist_bins);
    const double width = max_t > min_t ? (max_t - min_t) / bins : 1.0;
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (double v : abilities.theta) {
        int b = static_cast<int>((v - min_t) / width);
        b = std::clamp(b, 0, bins - 1);  // right-closed last bin
        ++counts[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < bins; ++b) {
        std::vector<std::string> row{"hist", ""};
        for (std::size_t c = 0; c < curves.size(); ++c) row.push_back("");
        row.push_back(csv::format_double(min_t + b * width));
        row.push_back(csv::format_double(min_t + (b + 1) * width));
        row.push_back(std::to_string(counts[static_cast<std::size_t>(b)]));
        out += csv::format_row(row);
    }
    return out;
}

}  // namespace anaquest::prox
