#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "csb/scenario.hpp"
#include "csb/sem.hpp"

namespace csb {

/// What a policy knows about the problem before the first round.
struct PolicyContext {
    int K = 0;
    int m = 1;
    int T = 1;
    Vector c;
    Grouping grouping;  // side information on which arms change together

    static PolicyContext from(const Scenario& s) { return {s.K, s.m, s.T, s.c, s.grouping}; }
};

/// Per-round information handed to the policy by the environment loop.
/// `true_graph` is the ground-truth graph, which only the oracle-access
/// baselines read. `changed_arms` lists arms whose distribution changes at
/// this round; only the oracle-restart policy reads it.
struct RoundInfo {
    int t = 1;
    const AdjacencyMatrix* true_graph = nullptr;
    std::vector<int> changed_arms;
};

struct PolicyEvents {
    std::vector<int> fired;      // arms whose detector fired
    std::vector<int> restarted;  // arms whose statistics were reset
    bool graph_change = false;   // residual test rejected the current estimate
    bool gldg_active = false;    // this round played an initialization column
    bool graph_relearn = false;  // a fresh graph estimate was solved this round
};

class Policy {
  public:
    virtual ~Policy() = default;

    virtual std::string name() const = 0;
    virtual DecisionVector select(const RoundInfo& info) = 0;
    virtual PolicyEvents observe(const RoundInfo& info, const DecisionVector& x, const RoundFeedback& feedback) = 0;

    /// Current working graph estimate, when the policy learns one.
    virtual std::optional<Matrix> graph_estimate() const { return std::nullopt; }

    /// Rounds in which an arm with no observations was neither queued nor
    /// force-included. Must stay zero.
    virtual long omega_violations() const { return 0; }
};

/// UCB index mu + sqrt((m + 1) ln(t - tau) / n). Natural log; the bonus is
/// zero when t - tau == 1. n == 0 is a contract violation (std::logic_error).
double ucb_index(double mu_hat, int n, int t, int tau, int m);

/// argmax over feasible x of c^T (I - W)^{-1} diag(U) x by ranking the
/// per-arm contributions. Arms flagged in `forced` are taken first (their
/// index is treated as +infinity).
DecisionVector select_super_arm(const Vector& c, const AdjacencyMatrix& w, const Vector& u, int m,
                                const std::vector<bool>& forced = {});

enum class RestartKind { local, global, group };

/// Which arms are reset together when a detector fires.
class RestartStrategy {
  public:
    RestartStrategy() = default;
    RestartStrategy(RestartKind kind, int k, const Grouping& grouping = {});

    RestartKind kind() const { return kind_; }
    const Grouping& groups() const { return groups_; }
    const Group& group_containing(int arm) const { return groups_[static_cast<std::size_t>(group_of_[static_cast<std::size_t>(arm)])]; }
    int group_index(int arm) const { return group_of_[static_cast<std::size_t>(arm)]; }

  private:
    RestartKind kind_ = RestartKind::global;
    Grouping groups_;
    std::vector<int> group_of_;
};

}  // namespace csb
