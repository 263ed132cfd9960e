#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anaquest/irt.hpp"
#include "anaquest/model.hpp"

namespace anaquest::prox {

// Point in the (alpha, beta) plane.
using Sample = std::array<double, 2>;

struct GridSpec {
    double x_min = 0, x_max = 1;
    double y_min = 0, y_max = 1;
    int nx = 128, ny = 128;

    double dx() const { return (x_max - x_min) / nx; }
    double dy() const { return (y_max - y_min) / ny; }
    double x_center(int i) const { return x_min + (i + 0.5) * dx(); }
    double y_center(int j) const { return y_min + (j + 0.5) * dy(); }
    bool operator==(const GridSpec& o) const = default;
};

struct Density2D {
    GridSpec grid;
    std::vector<double> values;  // x-major: values[i * ny + j], renormalized on the grid
    double h_x = 0, h_y = 0;     // bandwidths used

    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * grid.ny + j]; }
};

struct KdeOptions {
    std::optional<double> bandwidth_x;  // override; default sigma * n^(-1/6)
    std::optional<double> bandwidth_y;
    std::optional<GridSpec> grid;       // default: sample range padded by 3 * max bandwidth
    int resolution = 128;
};

// Product-Gaussian kernel density on a rectangular grid. Degenerate samples
// (zero variance in a coordinate) are an error unless an explicit bandwidth
// is supplied.
Density2D kde_2d(const std::vector<Sample>& samples, const KdeOptions& opts = {});

// D(P || Q) = sum p * ln(p/q) * cell_area with q floored at 1e-12; both
// densities must live on the identical grid.
double kld(const Density2D& p, const Density2D& q);

// Per-coordinate default bandwidth for n 2-dimensional samples.
double default_bandwidth(double sigma, std::size_t n);

// One grid covering every group's samples, padded by 3x the largest default
// bandwidth, so divergences are comparable across sources.
GridSpec shared_grid(const std::map<model::Source, std::vector<Sample>>& samples_by_source,
                     int resolution);

struct ProximityPair {
    model::Source p;  // the reference distribution of D(P || Q)
    model::Source q;
    double kld = 0;
};

struct ProximityReport {
    std::string level;  // question or foil
    std::vector<ProximityPair> pairs;
    GridSpec grid;
    std::map<model::Source, std::pair<double, double>> bandwidths;
    std::map<model::Source, int> counts;
    // among non-Human sources: the one with the smallest D(Human || source)
    std::optional<model::Source> closest_to_human;
};

// KDE per source on a shared grid plus every ordered-pair divergence.
ProximityReport compare_sources(const std::map<model::Source, std::vector<Sample>>& by_source,
                                const std::string& level, int resolution = 128);

nlohmann::json report_to_json(const ProximityReport& report);

struct IccExportOptions {
    int curve_points = 201;   // theta grid resolution
    double span_sd = 4.0;     // theta spans mean(theta) +- span_sd * SD
    int hist_bins = 20;
};

// Plot data for the ICC-over-ability-histogram figure: one curve row per
// theta grid point with a P column per source, then histogram rows binned
// over [min theta, max theta] so the counts conserve the student count.
std::string format_icc_figure_csv(const std::map<model::Source, irt::MeanCurve>& curves,
                                  const irt::AbilityEstimates& abilities,
                                  const IccExportOptions& opts = {});

}  // namespace anaquest::prox
