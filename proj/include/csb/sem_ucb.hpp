#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "csb/glr.hpp"
#include "csb/graph_learn.hpp"
#include "csb/policy.hpp"
#include "csb/rng.hpp"

namespace csb {

enum class GraphSource { learned, ground_truth };
enum class ChangeDetection { glr, oracle };

struct SemUcbConfig {
    RestartStrategy restart;
    GraphSource graph = GraphSource::learned;
    ChangeDetection detection = ChangeDetection::glr;
    double delta = 0.01;
    double p = 0.05;  // forced-exploration probability, period floor(K / p)
    ThresholdMode threshold = ThresholdMode::practical;
    std::size_t stride = 1;
    LearnerConfig learner;
};

/// UCB over base arms with per-arm GLR detectors, restart queue, periodic
/// forced exploration and (optionally) online learning of the causal graph.
///
/// With GraphSource::learned this is PS-SEM-UCB: the first K rounds, and the
/// K rounds after every rejected graph estimate, play the initialization
/// design to re-identify W. With GraphSource::ground_truth the selection
/// uses the environment's graph instead (the GLR-CUCB baselines).
/// ChangeDetection::oracle disables the detectors and restarts exactly the
/// groups reported as changed by the environment.
class SemUcbPolicy : public Policy {
  public:
    SemUcbPolicy(std::string name, const PolicyContext& context, SemUcbConfig config, Rng rng);

    std::string name() const override { return name_; }
    DecisionVector select(const RoundInfo& info) override;
    PolicyEvents observe(const RoundInfo& info, const DecisionVector& x, const RoundFeedback& feedback) override;
    std::optional<Matrix> graph_estimate() const override;
    long omega_violations() const override { return omega_violations_; }

    // State inspection, mostly for tests.
    const std::vector<int>& counts() const { return n_; }
    const Vector& means() const { return mu_hat_; }
    const std::vector<int>& restart_rounds() const { return tau_; }
    int anchor_round() const { return tau_prime_; }
    const std::deque<int>& queue() const { return omega_; }
    const Vector& indices() const { return u_; }
    bool learning_graph() const { return gldg_active_; }
    int exploration_period() const { return period_; }
    const FeedbackBuffer& buffer() const { return buffer_; }
    const GlrDetector& detector(int arm) const { return detectors_[static_cast<std::size_t>(arm)]; }
    long forced_inclusions() const { return forced_inclusions_; }

    /// Applies the restart strategy for `arm` at round t (reset statistics of
    /// its group, set tau and tau', enqueue the group). Returns the arms reset.
    std::vector<int> restart_group_of(int arm, int t);

  private:
    void enqueue(int arm);
    DecisionVector complete_from_queue(int first);
    void refresh_working_graph();

    std::string name_;
    PolicyContext ctx_;
    SemUcbConfig cfg_;
    Rng rng_;
    int period_;

    std::vector<int> n_;
    Vector mu_hat_;
    std::vector<int> tau_;
    int tau_prime_ = 0;
    std::deque<int> omega_;
    std::vector<bool> queued_;
    Vector u_;
    std::vector<GlrDetector> detectors_;

    bool gldg_active_ = false;
    int init_cursor_ = 0;
    FeedbackBuffer buffer_;
    std::optional<GraphEstimate> estimate_;
    std::optional<Matrix> previous_segment_graph_;
    AdjacencyMatrix working_graph_;

    bool round_in_gldg_ = false;
    std::vector<int> pending_restarts_;
    long omega_violations_ = 0;
    long forced_inclusions_ = 0;
};

}  // namespace csb
