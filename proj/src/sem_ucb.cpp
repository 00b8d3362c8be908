#include "csb/sem_ucb.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace csb {

SemUcbPolicy::SemUcbPolicy(std::string name, const PolicyContext& context, SemUcbConfig config, Rng rng)
    : name_(std::move(name)),
      ctx_(context),
      cfg_(std::move(config)),
      rng_(rng),
      n_(static_cast<std::size_t>(context.K), 0),
      mu_hat_(Vector::Zero(context.K)),
      tau_(static_cast<std::size_t>(context.K), 0),
      queued_(static_cast<std::size_t>(context.K), false),
      u_(Vector::Zero(context.K)),
      buffer_(context.K),
      working_graph_(AdjacencyMatrix::zero(context.K)) {
    if (!(cfg_.p > 0.0 && cfg_.p < 1.0)) throw std::invalid_argument(name_ + ": p must lie in (0, 1)");
    if (cfg_.restart.groups().empty()) cfg_.restart = RestartStrategy(RestartKind::global, ctx_.K);
    if (cfg_.learner.regularizer == Regularizer::dtv) cfg_.learner.allow_cycles = true;
    period_ = std::max(1, static_cast<int>(std::floor(ctx_.K / cfg_.p)));
    if (cfg_.detection == ChangeDetection::glr) {
        detectors_.assign(static_cast<std::size_t>(ctx_.K), GlrDetector(cfg_.delta, cfg_.threshold, cfg_.stride));
    }
    gldg_active_ = cfg_.graph == GraphSource::learned;
}

void SemUcbPolicy::enqueue(int arm) {
    if (queued_[static_cast<std::size_t>(arm)]) return;
    queued_[static_cast<std::size_t>(arm)] = true;
    omega_.push_back(arm);
}

std::vector<int> SemUcbPolicy::restart_group_of(int arm, int t) {
    const Group& group = cfg_.restart.group_containing(arm);
    for (int k : group) {
        n_[static_cast<std::size_t>(k)] = 0;
        mu_hat_(k) = 0.0;
        tau_[static_cast<std::size_t>(k)] = t;
        if (!detectors_.empty()) detectors_[static_cast<std::size_t>(k)].reset();
    }
    tau_prime_ = t;
    std::vector<int> sorted = group;
    std::sort(sorted.begin(), sorted.end());
    for (int k : sorted) enqueue(k);
    return sorted;
}

DecisionVector SemUcbPolicy::complete_from_queue(int first) {
    DecisionVector x(ctx_.K);
    x.set(first);
    const auto want = static_cast<std::size_t>(std::min(ctx_.m, ctx_.K) - 1);

    std::vector<int> others(omega_.begin(), omega_.end());
    const auto from_queue = rng_.sample(others, want);
    for (int a : from_queue) {
        x.set(a);
        queued_[static_cast<std::size_t>(a)] = false;
    }
    if (!from_queue.empty()) {
        omega_.erase(std::remove_if(omega_.begin(), omega_.end(), [&](int a) { return x[a]; }), omega_.end());
    }

    std::vector<int> rest;
    for (int a = 0; a < ctx_.K; ++a) {
        if (!x[a] && !queued_[static_cast<std::size_t>(a)]) rest.push_back(a);
    }
    for (int a : rng_.sample(rest, want - from_queue.size())) x.set(a);
    return x;
}

DecisionVector SemUcbPolicy::select(const RoundInfo& info) {
    const int t = info.t;
    round_in_gldg_ = false;
    pending_restarts_.clear();

    if (cfg_.detection == ChangeDetection::oracle && !info.changed_arms.empty()) {
        std::set<int> done;
        for (int arm : info.changed_arms) {
            if (!done.insert(cfg_.restart.group_index(arm)).second) continue;
            // The change takes effect at t, so samples from t onwards count.
            const auto reset = restart_group_of(arm, t - 1);
            pending_restarts_.insert(pending_restarts_.end(), reset.begin(), reset.end());
        }
    }

    if (cfg_.graph == GraphSource::learned && gldg_active_) {
        round_in_gldg_ = true;
        return init_column(ctx_.K, init_cursor_);
    }

    if (!omega_.empty()) {
        const int first = omega_.front();
        omega_.pop_front();
        queued_[static_cast<std::size_t>(first)] = false;
        return complete_from_queue(first);
    }

    const AdjacencyMatrix* graph = &working_graph_;
    if (cfg_.graph == GraphSource::ground_truth) {
        if (info.true_graph == nullptr) throw std::invalid_argument(name_ + ": ground-truth graph required");
        graph = info.true_graph;
    }

    // Arms without observations (not queued, since the queue is empty) get
    // an infinite index.
    std::vector<bool> forced(static_cast<std::size_t>(ctx_.K), false);
    for (int k = 0; k < ctx_.K; ++k) {
        if (n_[static_cast<std::size_t>(k)] == 0) {
            forced[static_cast<std::size_t>(k)] = true;
            ++forced_inclusions_;
        }
    }
    for (int k = 0; k < ctx_.K; ++k) {
        const bool covered = n_[static_cast<std::size_t>(k)] >= 1 || forced[static_cast<std::size_t>(k)];
        if (!covered) ++omega_violations_;
    }
    return select_super_arm(ctx_.c, *graph, u_, ctx_.m, forced);
}

PolicyEvents SemUcbPolicy::observe(const RoundInfo& info, const DecisionVector& x, const RoundFeedback& feedback) {
    const int t = info.t;
    PolicyEvents events;
    events.gldg_active = round_in_gldg_;
    events.restarted = std::move(pending_restarts_);
    pending_restarts_.clear();

    for (int k : x.arms()) {
        auto& count = n_[static_cast<std::size_t>(k)];
        const double z = std::clamp(feedback.z(k), 0.0, 1.0);
        ++count;
        mu_hat_(k) += (z - mu_hat_(k)) / count;
        if (!detectors_.empty() && detectors_[static_cast<std::size_t>(k)].push(z)) events.fired.push_back(k);
    }
    std::set<int> restarted_groups;
    for (int k : events.fired) {
        if (!restarted_groups.insert(cfg_.restart.group_index(k)).second) continue;
        const auto reset = restart_group_of(k, t);
        events.restarted.insert(events.restarted.end(), reset.begin(), reset.end());
    }

    const int since_anchor = t - tau_prime_;
    if (!round_in_gldg_ && since_anchor > 0 && since_anchor % period_ == 0) {
        omega_.clear();
        for (int k = 0; k < ctx_.K; ++k) {
            omega_.push_back(k);
            queued_[static_cast<std::size_t>(k)] = true;
        }
    }

    for (int k = 0; k < ctx_.K; ++k) {
        const int count = n_[static_cast<std::size_t>(k)];
        if (count > 0) u_(k) = ucb_index(mu_hat_(k), count, t, tau_[static_cast<std::size_t>(k)], ctx_.m);
    }

    if (cfg_.graph != GraphSource::learned) return events;

    if (round_in_gldg_) {
        buffer_.append(feedback.y, feedback.z);
        if (++init_cursor_ == ctx_.K) {
            const Matrix* anchor = previous_segment_graph_ ? &*previous_segment_graph_ : nullptr;
            estimate_ = estimate_adjacency(buffer_, cfg_.learner, nullptr, anchor);
            refresh_working_graph();
            gldg_active_ = false;
            init_cursor_ = 0;
            events.graph_relearn = true;
        }
        return events;
    }

    buffer_.append(feedback.y, feedback.z);
    if (residual_test(estimate_->W_hat, feedback.y, feedback.z, cfg_.learner.epsilon_residual)) {
        previous_segment_graph_ = estimate_->W_hat;
        gldg_active_ = true;
        init_cursor_ = 0;
        buffer_.clear();
        events.graph_change = true;
    } else {
        const Matrix* anchor = previous_segment_graph_ ? &*previous_segment_graph_ : nullptr;
        estimate_ = estimate_adjacency(buffer_, cfg_.learner, &*estimate_, anchor);
        refresh_working_graph();
    }
    return events;
}

void SemUcbPolicy::refresh_working_graph() {
    try {
        working_graph_ = estimate_->adjacency();
    } catch (const NumericError&) {
        // Keep the last usable graph; the next solve may recover.
    }
}

std::optional<Matrix> SemUcbPolicy::graph_estimate() const {
    if (cfg_.graph != GraphSource::learned) return std::nullopt;
    if (!estimate_) return Matrix::Zero(ctx_.K, ctx_.K);
    return estimate_->W_hat;
}

}  // namespace csb
