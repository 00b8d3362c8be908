#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "csb/scenario.hpp"

namespace csb {

/// (N_g, K_g): segment count and size of one group.
struct GroupProfile {
    int segments = 1;
    int size = 1;
};

struct BoundParams {
    double omega_max = 1.0;
    int m = 1;
    int K = 1;
    double T = 1.0;  // real-valued so that T = e can be evaluated
    double delta_min = 1.0;
    double delta_max = 1.0;
    double delta = 0.0;  // GLR confidence
    double p = 0.0;      // forced-exploration probability
    double d = 0.0;      // largest detection delay, in rounds
    std::vector<GroupProfile> group_profile{{1, 1}};
    int N_W = 1;
    double delta_min_change = 1.0;

    int N_G() const;

    /// Throws std::domain_error for delta_min <= 0 and std::invalid_argument
    /// for other violated invariants.
    void validate() const;
};

/// 4 w^2 m^2 (m + 1) ln T Delta_max / Delta_min^2
double r0_term(const BoundParams& params);

/// Stationary regret bound.
double lemma1_bound(const BoundParams& params);

/// Piecewise-stationary regret bound of the group-restart policy.
double theorem1_bound(const BoundParams& params);

enum class RestartCase { local, global, group, group_with_unchanged };

/// Regret increase within one segment under each restart strategy, given
/// kappa changed arms spread over eta groups and s unchanged arms that share
/// a group with a changed one.
double remark1_increment(RestartCase which, double c1, double c2, double kappa, double eta, double s, double k);

/// Order-level bound for delta = 1/T with the tuned p, constants set to 1.
/// Throws std::domain_error when delta_min_change or delta_min is 0.
double corollary_bound(const BoundParams& params);

/// max over graph segments of the entries of c^T (I - W)^{-1}.
double omega_max(const Scenario& scenario);

struct GapRange {
    double min = std::numeric_limits<double>::infinity();  // smallest positive gap
    double max = 0.0;
};

/// Suboptimality gaps over every feasible decision vector and every
/// (graph, distribution) segment pair that is active at some round.
GapRange suboptimality_gaps(const Scenario& scenario, double tolerance = 1e-12);

/// Smallest, over distribution changes, of the largest per-arm shift of the
/// post-truncation means. Infinity when the scenario has no change.
double min_change_magnitude(const Scenario& scenario);

/// Bound parameters read off a scenario; delta, p and d come from the caller.
BoundParams params_from_scenario(const Scenario& scenario, double delta, double p, double d);

}  // namespace csb
