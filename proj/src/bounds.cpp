#include "csb/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace csb {

int BoundParams::N_G() const {
    int total = 0;
    for (const auto& g : group_profile) total += g.segments;
    return total;
}

void BoundParams::validate() const {
    if (!(delta_min > 0.0)) throw std::domain_error("bounds: delta_min must be positive");
    if (delta_max < delta_min) throw std::invalid_argument("bounds: delta_min exceeds delta_max");
    if (m < 1 || K < 1 || N_W < 1) throw std::invalid_argument("bounds: m, K and N_W must be >= 1");
    if (!(T >= 1.0)) throw std::invalid_argument("bounds: T must be >= 1");
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("bounds: p must lie in [0, 1)");
    if (delta < 0.0 || d < 0.0 || omega_max < 0.0) throw std::invalid_argument("bounds: negative delta, d or omega");
    if (group_profile.empty()) throw std::invalid_argument("bounds: empty group profile");
    for (const auto& g : group_profile) {
        if (g.segments < 1 || g.size < 1) throw std::invalid_argument("bounds: group counts must be >= 1");
    }
}

namespace {

// The group profile partitions the arms; the stationary bound ignores it.
void check_profile(const BoundParams& q) {
    int arms = 0;
    for (const auto& g : q.group_profile) arms += g.size;
    if (arms != q.K) throw std::invalid_argument("bounds: group sizes must add up to K");
}

}  // namespace

double r0_term(const BoundParams& q) {
    const double mm = q.m;
    return 4.0 * q.omega_max * q.omega_max * mm * mm * (mm + 1.0) * std::log(q.T) * q.delta_max /
           (q.delta_min * q.delta_min);
}

double lemma1_bound(const BoundParams& q) {
    q.validate();
    const double mm = q.m;
    const double kk = q.K;
    const double log_term =
        4.0 * q.omega_max * q.omega_max * mm * mm * (mm + 1.0) * kk * std::log(q.T) / (q.delta_min * q.delta_min);
    return (log_term + std::numbers::pi * std::numbers::pi / 3.0 * mm * kk + kk) * q.delta_max;
}

double theorem1_bound(const BoundParams& q) {
    q.validate();
    check_profile(q);
    const double r0 = r0_term(q);
    const double per_arm_const = q.delta * q.T + 1.0 + std::numbers::pi * std::numbers::pi * q.m / 3.0;
    double total = 0.0;
    for (const auto& g : q.group_profile) {
        const double nk = static_cast<double>(g.segments) * g.size;
        total += nk * r0 + per_arm_const * nk * q.delta_max;
    }
    const double n_g = q.N_G();
    total += (q.T * q.p + q.d * n_g + q.delta * q.T * (q.K + n_g) + static_cast<double>(q.N_W) * q.K) * q.delta_max;
    return total;
}

double remark1_increment(RestartCase which, double c1, double c2, double kappa, double eta, double s, double k) {
    switch (which) {
        case RestartCase::local:
            return c1 * kappa + c2 * kappa;
        case RestartCase::global:
            return c1 * k + c2;
        case RestartCase::group:
            return c1 * kappa + c2 * eta;
        case RestartCase::group_with_unchanged:
            return c1 * (kappa + s) + c2 * eta;
    }
    throw std::invalid_argument("remark1_increment: unknown case");
}

double corollary_bound(const BoundParams& q) {
    if (!(q.delta_min_change > 0.0)) throw std::domain_error("bounds: delta_min_change must be positive");
    q.validate();
    check_profile(q);
    const double log_t = std::log(q.T);
    double stationary = 0.0;
    for (const auto& g : q.group_profile) stationary += static_cast<double>(g.segments) * g.size * log_t / q.delta_min;
    const double detection =
        std::sqrt(static_cast<double>(q.N_G()) * q.K * q.T * log_t) / (q.delta_min_change * q.delta_min_change);
    return (stationary + detection + static_cast<double>(q.N_W) * q.K) * q.delta_max;
}

double omega_max(const Scenario& s) {
    double best = 0.0;
    for (const auto& seg : s.graph_segments) best = std::max(best, seg.graph.solve_transpose(s.c).maxCoeff());
    return best;
}

namespace {

// Calls f on every subset of {0..k-1} with at most m elements.
template <class F>
void for_each_subset(int k, int m, F&& f) {
    std::vector<int> chosen;
    auto rec = [&](auto&& self, int next) -> void {
        f(chosen);
        if (static_cast<int>(chosen.size()) == m) return;
        for (int a = next; a < k; ++a) {
            chosen.push_back(a);
            self(self, a + 1);
            chosen.pop_back();
        }
    };
    rec(rec, 0);
}

}  // namespace

GapRange suboptimality_gaps(const Scenario& s, double tolerance) {
    std::set<int> boundaries;
    for (const auto& g : s.graph_segments) boundaries.insert(g.start);
    for (const auto& d : s.dist_segments) boundaries.insert(d.start);
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (int t : boundaries) {
        if (t <= s.T) pairs.emplace(s.graph_index_at(t), s.dist_index_at(t));
    }

    GapRange range;
    for (const auto& [gi, di] : pairs) {
        const Vector weights = payoff_weights(s.c, s.graph_segments[gi].graph, s.true_means(di));
        std::vector<double> values;
        double best = -std::numeric_limits<double>::infinity();
        for_each_subset(s.K, s.m, [&](const std::vector<int>& arms) {
            double v = 0.0;
            for (int a : arms) v += weights(a);
            values.push_back(v);
            best = std::max(best, v);
        });
        for (double v : values) {
            const double gap = best - v;
            range.max = std::max(range.max, gap);
            if (gap > tolerance) range.min = std::min(range.min, gap);
        }
    }
    return range;
}

double min_change_magnitude(const Scenario& s) {
    double smallest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < s.dist_segments.size(); ++i) {
        const double shift = (s.true_means(i) - s.true_means(i - 1)).cwiseAbs().maxCoeff();
        smallest = std::min(smallest, shift);
    }
    return smallest;
}

BoundParams params_from_scenario(const Scenario& s, double delta, double p, double d) {
    BoundParams q;
    q.omega_max = omega_max(s);
    q.m = s.m;
    q.K = s.K;
    q.T = s.T;
    const GapRange gaps = suboptimality_gaps(s);
    if (!std::isfinite(gaps.min)) throw std::domain_error("bounds: every feasible action is optimal (delta_min = 0)");
    q.delta_min = gaps.min;
    q.delta_max = gaps.max;
    q.delta = delta;
    q.p = p;
    q.d = d;
    q.group_profile.clear();
    for (const auto& g : s.grouping) q.group_profile.push_back({group_segment_count(s, g), static_cast<int>(g.size())});
    q.N_W = static_cast<int>(s.graph_segments.size());
    q.delta_min_change = min_change_magnitude(s);
    return q;
}

}  // namespace csb
