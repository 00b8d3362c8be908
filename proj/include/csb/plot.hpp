#pragma once

#include <istream>
#include <string>
#include <vector>

namespace csb {

struct RegretCurve {
    std::string policy;
    std::vector<int> t;
    std::vector<double> mean;
};

/// Parses an aggregate CSV (policy,t,mean,se,lower,upper,mean_mse). Curves
/// keep first-appearance order. Throws std::runtime_error on malformed input.
std::vector<RegretCurve> read_aggregate_csv(std::istream& in);

struct PlotMarkers {
    std::vector<int> dist_changes;   // green solid lines
    std::vector<int> graph_changes;  // red dashed lines
};

/// Mean cumulative regret against rounds, one polyline per policy, with
/// vertical lines at the change rounds. Long curves are thinned to at most
/// `max_points` vertices, always keeping the last one.
std::string render_regret_svg(const std::vector<RegretCurve>& curves, const PlotMarkers& markers,
                              std::size_t max_points = 1500);

}  // namespace csb
