#pragma once

#include <deque>
#include <string>
#include <vector>

#include "csb/policy.hpp"
#include "csb/rng.hpp"

namespace csb {

/// CUCB over the last `window` observations of each arm, with oracle access
/// to the true graph. The log term uses t - max(0, t - window), so a window
/// that never truncates reproduces plain CUCB.
class SlidingWindowCucb : public Policy {
  public:
    SlidingWindowCucb(const PolicyContext& context, int window);

    std::string name() const override { return "cucb-sw"; }
    DecisionVector select(const RoundInfo& info) override;
    PolicyEvents observe(const RoundInfo& info, const DecisionVector& x, const RoundFeedback& feedback) override;

    int window() const { return window_; }
    int in_window_count(int arm) const { return static_cast<int>(samples_[static_cast<std::size_t>(arm)].size()); }
    double in_window_mean(int arm) const;
    Vector indices(int t) const;

  private:
    PolicyContext ctx_;
    int window_;
    std::vector<std::deque<double>> samples_;
    std::vector<double> sums_;
    std::vector<long> evictions_;
};

/// Combinatorial Thompson sampling with Beta posteriors and Bernoulli
/// resampling of bounded feedback, with oracle access to the true graph.
class CombinatorialThompson : public Policy {
  public:
    CombinatorialThompson(const PolicyContext& context, Rng rng);

    std::string name() const override { return "cts"; }
    DecisionVector select(const RoundInfo& info) override;
    PolicyEvents observe(const RoundInfo& info, const DecisionVector& x, const RoundFeedback& feedback) override;

    double alpha(int arm) const { return alpha_[static_cast<std::size_t>(arm)]; }
    double beta(int arm) const { return beta_[static_cast<std::size_t>(arm)]; }
    double posterior_mean(int arm) const { return alpha(arm) / (alpha(arm) + beta(arm)); }
    double sample_posterior(int arm);

  private:
    PolicyContext ctx_;
    Rng rng_;
    std::vector<double> alpha_;
    std::vector<double> beta_;
};

/// Plays the optimal action of the active segment every round. Reference
/// policy for tests and sanity checks; it is not registered by name.
class OptimalPolicy : public Policy {
  public:
    OptimalPolicy(const Scenario& scenario) : scenario_(scenario) {}

    std::string name() const override { return "optimal"; }
    DecisionVector select(const RoundInfo& info) override;
    PolicyEvents observe(const RoundInfo&, const DecisionVector&, const RoundFeedback&) override { return {}; }

  private:
    const Scenario& scenario_;
};

}  // namespace csb
