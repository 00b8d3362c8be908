#include "csb/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

namespace csb {

SlidingWindowCucb::SlidingWindowCucb(const PolicyContext& context, int window)
    : ctx_(context),
      window_(window),
      samples_(static_cast<std::size_t>(context.K)),
      sums_(static_cast<std::size_t>(context.K), 0.0),
      evictions_(static_cast<std::size_t>(context.K), 0) {
    if (window < 1) throw std::invalid_argument("cucb-sw: window must be >= 1");
}

double SlidingWindowCucb::in_window_mean(int arm) const {
    const auto& s = samples_[static_cast<std::size_t>(arm)];
    return s.empty() ? 0.0 : sums_[static_cast<std::size_t>(arm)] / static_cast<double>(s.size());
}

Vector SlidingWindowCucb::indices(int t) const {
    Vector u = Vector::Zero(ctx_.K);
    const int tau = std::max(0, t - window_);
    for (int k = 0; k < ctx_.K; ++k) {
        const int n = in_window_count(k);
        if (n > 0 && t > tau) u(k) = ucb_index(in_window_mean(k), n, t, tau, ctx_.m);
    }
    return u;
}

DecisionVector SlidingWindowCucb::select(const RoundInfo& info) {
    if (info.true_graph == nullptr) throw std::invalid_argument("cucb-sw: ground-truth graph required");
    std::vector<bool> forced(static_cast<std::size_t>(ctx_.K));
    for (int k = 0; k < ctx_.K; ++k) forced[static_cast<std::size_t>(k)] = in_window_count(k) == 0;
    return select_super_arm(ctx_.c, *info.true_graph, indices(info.t), ctx_.m, forced);
}

PolicyEvents SlidingWindowCucb::observe(const RoundInfo&, const DecisionVector& x, const RoundFeedback& feedback) {
    for (int k : x.arms()) {
        auto& s = samples_[static_cast<std::size_t>(k)];
        auto& sum = sums_[static_cast<std::size_t>(k)];
        const double z = std::clamp(feedback.z(k), 0.0, 1.0);
        s.push_back(z);
        sum += z;
        if (static_cast<int>(s.size()) > window_) {
            sum -= s.front();
            s.pop_front();
            // Full re-sum once per window length bounds the drift of the running total.
            if (++evictions_[static_cast<std::size_t>(k)] % window_ == 0) sum = std::accumulate(s.begin(), s.end(), 0.0);
        }
    }
    return {};
}

CombinatorialThompson::CombinatorialThompson(const PolicyContext& context, Rng rng)
    : ctx_(context),
      rng_(rng),
      alpha_(static_cast<std::size_t>(context.K), 1.0),
      beta_(static_cast<std::size_t>(context.K), 1.0) {}

double CombinatorialThompson::sample_posterior(int arm) {
    // Inverse-CDF draw keeps the stream portable across standard libraries.
    return boost::math::ibeta_inv(alpha(arm), beta(arm), rng_.uniform_open());
}

DecisionVector CombinatorialThompson::select(const RoundInfo& info) {
    if (info.true_graph == nullptr) throw std::invalid_argument("cts: ground-truth graph required");
    Vector theta(ctx_.K);
    for (int k = 0; k < ctx_.K; ++k) theta(k) = sample_posterior(k);
    return select_super_arm(ctx_.c, *info.true_graph, theta, ctx_.m);
}

PolicyEvents CombinatorialThompson::observe(const RoundInfo&, const DecisionVector& x, const RoundFeedback& feedback) {
    for (int k : x.arms()) {
        const double z = std::clamp(feedback.z(k), 0.0, 1.0);
        if (rng_.uniform() < z) {
            alpha_[static_cast<std::size_t>(k)] += 1.0;
        } else {
            beta_[static_cast<std::size_t>(k)] += 1.0;
        }
    }
    return {};
}

DecisionVector OptimalPolicy::select(const RoundInfo& info) {
    const std::size_t d = scenario_.dist_index_at(info.t);
    return optimal_action(scenario_.c, scenario_.graph_at(info.t), scenario_.true_means(d), scenario_.m).x;
}

}  // namespace csb
