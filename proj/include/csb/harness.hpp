#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "csb/policy.hpp"
#include "csb/registry.hpp"
#include "csb/scenario.hpp"

namespace csb {

struct RoundRecord {
    int t = 0;
    DecisionVector x;
    Vector z;
    Vector y;
    double payoff = 0.0;
    double regret = 0.0;  // instantaneous expected regret
    std::vector<int> fired;
    std::vector<int> restarted;
    bool graph_change = false;
    bool gldg_active = false;
    bool graph_relearn = false;
    double mse = 0.0;  // NaN when the policy keeps no graph estimate
};

struct EpisodeTrace {
    std::string policy;
    std::vector<RoundRecord> rounds;
    long omega_violations = 0;
};

/// Plays T rounds of `policy` against the scenario. Environment draws come
/// from the environment sub-stream of `seed`; every round draws the full
/// reward vector, so traces of different policies share the same rewards.
/// Throws std::invalid_argument if the policy returns an action of the wrong
/// size or with more than m arms.
EpisodeTrace run_episode(const Scenario& scenario, Policy& policy, std::uint64_t seed);

/// Builds the policy from the registry, seeded from the policy sub-stream.
EpisodeTrace run_episode(const Scenario& scenario, const PolicySpec& spec, std::uint64_t seed);

/// Running sum of per-round regret recomputed from the trace's actions.
std::vector<double> cumulative_regret(const EpisodeTrace& trace, const Scenario& scenario);

/// ||a - b||_F^2 / K^2. Throws std::invalid_argument on a shape mismatch.
double mse(const Matrix& a, const Matrix& b);

struct Event {
    int t = 0;
    std::string type;  // detection, restart, graph_change, graph_relearn
    std::vector<int> arms;
};

/// Everything kept from one (policy, replication) episode.
struct ReplicationResult {
    std::vector<double> cum_regret;
    std::vector<double> mse;
    std::vector<int> detections;  // fired-arm count per round
    std::vector<Event> events;
    std::vector<int> detection_delays;
    int false_alarms = 0;
    int graph_relearns = 0;
    long omega_violations = 0;
};

/// Reduces a trace; `scenario` supplies the change rounds used to attribute
/// detection delays (most recent change, at or before the restart, of any
/// restarted arm).
ReplicationResult summarize(const EpisodeTrace& trace, const Scenario& scenario);

struct PolicyMetrics {
    std::string name;
    std::vector<double> mean_regret;
    std::vector<double> se_regret;
    std::vector<double> mean_mse;
    std::vector<ReplicationResult> replications;

    double final_mean() const { return mean_regret.empty() ? 0.0 : mean_regret.back(); }
    double final_se() const { return se_regret.empty() ? 0.0 : se_regret.back(); }
    long omega_violations() const;
};

struct MetricsBundle {
    int T = 0;
    std::vector<PolicyMetrics> policies;

    const PolicyMetrics& at(const std::string& name) const;
};

struct ExperimentConfig {
    std::vector<PolicySpec> policies;
    int replications = 20;
    std::uint64_t master_seed = 0;
    int threads = 0;  // 0: hardware concurrency, capped by CSB_THREADS
};

std::uint64_t replication_seed(std::uint64_t master_seed, int replication);

/// Runs every (policy, replication) pair, possibly concurrently, and
/// aggregates per policy. Results do not depend on the thread count.
MetricsBundle run_experiment(const Scenario& scenario, const ExperimentConfig& config);

// CSV output.
void write_rounds_csv(std::ostream& out, const MetricsBundle& metrics);
void write_aggregate_csv(std::ostream& out, const MetricsBundle& metrics);
void write_events_csv(std::ostream& out, const MetricsBundle& metrics);

/// Writes through a temporary sibling file and renames it into place, so
/// a failed write never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer);

/// Shortest round-trip text for a double.
std::string format_double(double v);

}  // namespace csb
