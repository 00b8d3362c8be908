#include "csb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

namespace csb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string join_arms(const std::vector<int>& arms) {
    std::string out;
    for (std::size_t i = 0; i < arms.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(arms[i]);
    }
    return out;
}

int thread_budget(int requested, std::size_t jobs) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CSB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    n = std::max(n, 1);
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(jobs, 1)));
}

}  // namespace

double mse(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("mse: shape mismatch");
    if (a.size() == 0) return 0.0;
    return (a - b).squaredNorm() / static_cast<double>(a.rows() * a.cols());
}

EpisodeTrace run_episode(const Scenario& s, Policy& policy, std::uint64_t seed) {
    s.validate();
    Rng env = Rng(seed).split(Stream::environment);

    EpisodeTrace trace;
    trace.policy = policy.name();
    trace.rounds.reserve(static_cast<std::size_t>(s.T));

    // Regret weights per (graph, distribution) pair, built lazily.
    std::map<std::pair<std::size_t, std::size_t>, std::pair<Vector, DecisionVector>> oracle;
    std::vector<Vector> means;
    for (std::size_t i = 0; i < s.dist_segments.size(); ++i) means.push_back(s.true_means(i));

    std::size_t gi = 0;
    std::size_t di = 0;
    for (int t = 1; t <= s.T; ++t) {
        while (gi + 1 < s.graph_segments.size() && s.graph_segments[gi + 1].start <= t) ++gi;
        bool dist_change = false;
        while (di + 1 < s.dist_segments.size() && s.dist_segments[di + 1].start <= t) {
            ++di;
            dist_change = true;
        }
        const AdjacencyMatrix& graph = s.graph_segments[gi].graph;
        const DistSegment& dist = s.dist_segments[di];

        RoundInfo info;
        info.t = t;
        info.true_graph = &graph;
        if (dist_change) info.changed_arms = s.changed_arms(di);

        RoundRecord rec;
        rec.t = t;
        rec.x = policy.select(info);
        if (rec.x.size() != s.K) throw std::invalid_argument("run_episode: action size does not match K");
        if (!rec.x.feasible(s.m)) throw std::invalid_argument("run_episode: action plays more than m arms");

        const Vector b = draw_instantaneous_rewards(dist.mu, dist.noise_scale, env);
        RoundFeedback fb = sem_output(graph, b, rec.x);
        fb.payoff = payoff(s.c, fb.y);

        const PolicyEvents ev = policy.observe(info, rec.x, fb);

        auto it = oracle.find({gi, di});
        if (it == oracle.end()) {
            Vector w = payoff_weights(s.c, graph, means[di]);
            DecisionVector best = top_m_positive(w, s.m);
            it = oracle.emplace(std::make_pair(gi, di), std::make_pair(std::move(w), std::move(best))).first;
        }
        rec.regret = payoff_gap(it->second.first, it->second.second, rec.x);

        rec.z = std::move(fb.z);
        rec.y = std::move(fb.y);
        rec.payoff = *fb.payoff;
        rec.fired = ev.fired;
        rec.restarted = ev.restarted;
        rec.graph_change = ev.graph_change;
        rec.gldg_active = ev.gldg_active;
        rec.graph_relearn = ev.graph_relearn;
        const auto estimate = policy.graph_estimate();
        rec.mse = estimate ? mse(graph.weights(), *estimate) : kNaN;
        trace.rounds.push_back(std::move(rec));
    }
    trace.omega_violations = policy.omega_violations();
    return trace;
}

EpisodeTrace run_episode(const Scenario& s, const PolicySpec& spec, std::uint64_t seed) {
    auto policy = make_policy(spec, PolicyContext::from(s), Rng(seed).split(Stream::policy));
    return run_episode(s, *policy, seed);
}

std::vector<double> cumulative_regret(const EpisodeTrace& trace, const Scenario& s) {
    std::vector<double> out;
    out.reserve(trace.rounds.size());
    double total = 0.0;
    for (const auto& r : trace.rounds) {
        const AdjacencyMatrix& w = s.graph_at(r.t);
        const Vector mu = s.true_means(s.dist_index_at(r.t));
        const OptimalAction best = optimal_action(s.c, w, mu, s.m);
        if (!(r.x == best.x)) total += best.value - expected_payoff(s.c, w, mu, r.x);
        out.push_back(total);
    }
    return out;
}

ReplicationResult summarize(const EpisodeTrace& trace, const Scenario& s) {
    ReplicationResult res;
    res.omega_violations = trace.omega_violations;
    res.cum_regret.reserve(trace.rounds.size());
    res.mse.reserve(trace.rounds.size());
    res.detections.reserve(trace.rounds.size());

    const auto change_rounds = s.dist_change_rounds();
    std::vector<std::vector<int>> changed;
    for (std::size_t i = 1; i < s.dist_segments.size(); ++i) changed.push_back(s.changed_arms(i));
    std::set<std::pair<std::size_t, int>> attributed;

    double total = 0.0;
    for (const auto& r : trace.rounds) {
        total += r.regret;
        res.cum_regret.push_back(total);
        res.mse.push_back(r.mse);
        res.detections.push_back(static_cast<int>(r.fired.size()));
        if (!r.fired.empty()) res.events.push_back({r.t, "detection", r.fired});
        if (!r.restarted.empty()) {
            res.events.push_back({r.t, "restart", r.restarted});
            std::optional<std::size_t> source;
            for (std::size_t i = change_rounds.size(); i-- > 0;) {
                if (change_rounds[i] > r.t) continue;
                const bool hits = std::any_of(r.restarted.begin(), r.restarted.end(), [&](int a) {
                    return std::find(changed[i].begin(), changed[i].end(), a) != changed[i].end();
                });
                if (hits) {
                    source = i;
                    break;
                }
            }
            if (!source) {
                ++res.false_alarms;
            } else if (attributed.emplace(*source, *std::min_element(r.restarted.begin(), r.restarted.end())).second) {
                res.detection_delays.push_back(r.t - change_rounds[*source]);
            }
        }
        if (r.graph_change) res.events.push_back({r.t, "graph_change", {}});
        if (r.graph_relearn) {
            res.events.push_back({r.t, "graph_relearn", {}});
            ++res.graph_relearns;
        }
    }
    return res;
}

long PolicyMetrics::omega_violations() const {
    long total = 0;
    for (const auto& r : replications) total += r.omega_violations;
    return total;
}

const PolicyMetrics& MetricsBundle::at(const std::string& name) const {
    for (const auto& p : policies) {
        if (p.name == name) return p;
    }
    throw std::out_of_range("no metrics for policy " + name);
}

std::uint64_t replication_seed(std::uint64_t master_seed, int replication) {
    return derive_seed(master_seed, static_cast<std::uint64_t>(replication));
}

MetricsBundle run_experiment(const Scenario& s, const ExperimentConfig& config) {
    s.validate();
    if (config.replications < 1) throw std::invalid_argument("replications must be >= 1");
    for (const auto& spec : config.policies) {
        if (!is_registered(spec.name)) throw std::invalid_argument("unknown policy: " + spec.name);
        // Surface bad parameters before any thread starts.
        make_policy(spec, PolicyContext::from(s), Rng(0));
    }

    const std::size_t reps = static_cast<std::size_t>(config.replications);
    const std::size_t jobs = config.policies.size() * reps;
    std::vector<ReplicationResult> results(jobs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
            try {
                const auto& spec = config.policies[j / reps];
                const int rep = static_cast<int>(j % reps);
                results[j] = summarize(run_episode(s, spec, replication_seed(config.master_seed, rep)), s);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = jobs;
            }
        }
    };
    const int threads = thread_budget(config.threads, jobs);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    MetricsBundle bundle;
    bundle.T = s.T;
    const auto T = static_cast<std::size_t>(s.T);
    for (std::size_t p = 0; p < config.policies.size(); ++p) {
        PolicyMetrics pm;
        pm.name = config.policies[p].name;
        pm.mean_regret.assign(T, 0.0);
        pm.se_regret.assign(T, 0.0);
        pm.mean_mse.assign(T, 0.0);
        for (std::size_t r = 0; r < reps; ++r) pm.replications.push_back(std::move(results[p * reps + r]));
        for (std::size_t t = 0; t < T; ++t) {
            double sum = 0.0;
            double mse_sum = 0.0;
            for (const auto& rep : pm.replications) {
                sum += rep.cum_regret[t];
                mse_sum += rep.mse[t];
            }
            const double mean = sum / static_cast<double>(reps);
            double ss = 0.0;
            for (const auto& rep : pm.replications) ss += (rep.cum_regret[t] - mean) * (rep.cum_regret[t] - mean);
            pm.mean_regret[t] = mean;
            pm.se_regret[t] = reps > 1 ? std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps)) : 0.0;
            pm.mean_mse[t] = mse_sum / static_cast<double>(reps);
        }
        bundle.policies.push_back(std::move(pm));
    }
    return bundle;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_rounds_csv(std::ostream& out, const MetricsBundle& metrics) {
    out << "policy,rep,t,cum_regret,mse,detections,restarted_arms,graph_relearn\n";
    for (const auto& pm : metrics.policies) {
        for (std::size_t r = 0; r < pm.replications.size(); ++r) {
            const auto& rep = pm.replications[r];
            std::vector<std::string> restarted(rep.cum_regret.size());
            std::vector<char> relearn(rep.cum_regret.size(), 0);
            for (const auto& e : rep.events) {
                const auto i = static_cast<std::size_t>(e.t - 1);
                if (e.type == "restart") restarted[i] = join_arms(e.arms);
                if (e.type == "graph_relearn") relearn[i] = 1;
            }
            for (std::size_t i = 0; i < rep.cum_regret.size(); ++i) {
                out << pm.name << ',' << r << ',' << i + 1 << ',' << format_double(rep.cum_regret[i]) << ','
                    << format_double(rep.mse[i]) << ',' << rep.detections[i] << ',' << restarted[i] << ','
                    << static_cast<int>(relearn[i]) << '\n';
            }
        }
    }
}

void write_aggregate_csv(std::ostream& out, const MetricsBundle& metrics) {
    out << "policy,t,mean,se,lower,upper,mean_mse\n";
    for (const auto& pm : metrics.policies) {
        for (std::size_t i = 0; i < pm.mean_regret.size(); ++i) {
            const double m = pm.mean_regret[i];
            const double se = pm.se_regret[i];
            out << pm.name << ',' << i + 1 << ',' << format_double(m) << ',' << format_double(se) << ','
                << format_double(m - 2.0 * se) << ',' << format_double(m + 2.0 * se) << ','
                << format_double(pm.mean_mse[i]) << '\n';
        }
    }
}

void write_events_csv(std::ostream& out, const MetricsBundle& metrics) {
    out << "policy,rep,t,event_type,arms\n";
    for (const auto& pm : metrics.policies) {
        for (std::size_t r = 0; r < pm.replications.size(); ++r) {
            for (const auto& e : pm.replications[r].events) {
                out << pm.name << ',' << r << ',' << e.t << ',' << e.type << ',' << join_arms(e.arms) << '\n';
            }
        }
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    try {
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
            writer(out);
            out.flush();
            if (!out) throw std::runtime_error("write failed: " + tmp.string());
        }
        std::filesystem::rename(tmp, path);
    } catch (...) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw;
    }
}

}  // namespace csb
