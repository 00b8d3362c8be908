#include "csb/policy.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace csb {

double ucb_index(double mu_hat, int n, int t, int tau, int m) {
    if (n <= 0) throw std::logic_error("ucb_index: arm has no observations since its last restart");
    if (t <= tau) throw std::logic_error("ucb_index: t must exceed the restart round");
    const int elapsed = t - tau;
    if (elapsed == 1) return mu_hat;
    return mu_hat + std::sqrt((m + 1) * std::log(static_cast<double>(elapsed)) / n);
}

DecisionVector select_super_arm(const Vector& c, const AdjacencyMatrix& w, const Vector& u, int m,
                                const std::vector<bool>& forced) {
    if (u.size() != w.size()) throw std::invalid_argument("select_super_arm: dimension mismatch");
    Vector finite = u;
    for (std::size_t k = 0; k < forced.size(); ++k) {
        if (forced[k]) finite(static_cast<Eigen::Index>(k)) = 0.0;
    }
    return top_m_positive(payoff_weights(c, w, finite), m, forced);
}

RestartStrategy::RestartStrategy(RestartKind kind, int k, const Grouping& grouping) : kind_(kind) {
    switch (kind) {
        case RestartKind::local:
            groups_ = singleton_grouping(k);
            break;
        case RestartKind::global:
            groups_ = global_grouping(k);
            break;
        case RestartKind::group:
            groups_ = grouping;
            break;
    }
    group_of_.assign(static_cast<std::size_t>(k), -1);
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        for (int a : groups_[g]) {
            if (a < 0 || a >= k || group_of_[static_cast<std::size_t>(a)] != -1) {
                throw std::invalid_argument("RestartStrategy: grouping is not a partition of the arms");
            }
            group_of_[static_cast<std::size_t>(a)] = static_cast<int>(g);
        }
    }
    for (int g : group_of_) {
        if (g == -1) throw std::invalid_argument("RestartStrategy: grouping does not cover every arm");
    }
}

}  // namespace csb
