#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csb/rng.hpp"
#include "csb/sem.hpp"

namespace csb {

using Group = std::vector<int>;
using Grouping = std::vector<Group>;

struct GraphSegment {
    int start = 1;  // 1-based round at which this graph becomes active
    AdjacencyMatrix graph;
};

struct DistSegment {
    int start = 1;
    Vector mu;  // location of each arm's truncated normal, in [0, 1]
    double noise_scale = 0.05;
};

/// A piecewise-stationary environment. Rounds are 1-based, arms 0-based.
struct Scenario {
    int K = 0;
    int T = 0;
    int m = 1;
    Vector c;
    std::vector<GraphSegment> graph_segments;
    std::vector<DistSegment> dist_segments;
    Grouping grouping;

    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const;

    std::size_t graph_index_at(int t) const;
    std::size_t dist_index_at(int t) const;
    const AdjacencyMatrix& graph_at(int t) const { return graph_segments[graph_index_at(t)].graph; }

    /// Post-truncation means of a distribution segment.
    Vector true_means(std::size_t dist_index) const;

    /// arm -> index into `grouping`
    std::vector<int> group_of_arm() const;

    std::vector<int> graph_change_rounds() const;
    std::vector<int> dist_change_rounds() const;

    /// Arms whose distribution differs between segment `dist_index - 1` and
    /// `dist_index`. Empty for index 0.
    std::vector<int> changed_arms(std::size_t dist_index) const;
};

/// Number of distribution-stationary segments seen by group `g`: one plus the
/// number of boundaries at which any of its arms changes.
int group_segment_count(const Scenario& scenario, const Group& g);

/// Sum of group_segment_count over the scenario's grouping.
int total_group_segments(const Scenario& scenario);

/// Singleton groups (local restarts) and one all-arm group (global restarts).
Grouping singleton_grouping(int k);
Grouping global_grouping(int k);

struct GeneratorParams {
    int K = 18;
    int T = 25000;
    int m = 4;
    std::vector<int> group_sizes{6, 6, 6};
    int graph_changes = 4;
    int dist_changes = 4;
    double density = 0.15;  // edges / (K (K - 1))
    double weight_lo = 0.1;
    double weight_hi = 0.9;
    double noise_scale = 0.05;
    // Groups receiving new means at each distribution change; 0 draws a
    // uniformly random nonempty subset.
    int groups_per_change = 0;
};

/// Random DAG with round(density * K (K - 1)) edges under a random
/// topological order, weights uniform on [lo, hi].
AdjacencyMatrix random_dag(int k, double density, double lo, double hi, Rng& rng);

Scenario generate_synthetic_scenario(const GeneratorParams& params, Rng& rng);

nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& doc);

Scenario load_scenario(const std::string& path);

}  // namespace csb
