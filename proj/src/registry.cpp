#include "csb/registry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "csb/baselines.hpp"
#include "csb/sem_ucb.hpp"

namespace csb {

namespace {

const std::vector<std::string> kSemUcbParams{"delta", "p", "n_g", "threshold", "stride"};
const std::vector<std::string> kLearnerParams{"lambda1", "lambda2", "epsilon", "regularizer", "max_iters", "tol"};

class Params {
  public:
    Params(const PolicySpec& spec, std::vector<std::string> allowed) : spec_(spec) {
        for (const auto& [key, value] : spec.params) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                throw std::invalid_argument("policy " + spec.name + ": unknown parameter '" + key + "'");
            }
        }
    }

    bool has(const std::string& key) const { return spec_.params.count(key) > 0; }

    double real(const std::string& key, double fallback) const {
        auto it = spec_.params.find(key);
        if (it == spec_.params.end()) return fallback;
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("policy " + spec_.name + ": parameter '" + key + "' is not a number: " + it->second);
        }
    }

    int integer(const std::string& key, int fallback) const {
        const double v = real(key, fallback);
        if (v != std::floor(v)) throw std::invalid_argument("policy " + spec_.name + ": parameter '" + key + "' must be an integer");
        return static_cast<int>(v);
    }

    std::string text(const std::string& key, const std::string& fallback) const {
        auto it = spec_.params.find(key);
        return it == spec_.params.end() ? fallback : it->second;
    }

  private:
    const PolicySpec& spec_;
};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

SemUcbConfig sem_ucb_config(const Params& params, const PolicyContext& ctx, RestartKind restart, GraphSource graph,
                            ChangeDetection detection) {
    SemUcbConfig cfg;
    cfg.restart = RestartStrategy(restart, ctx.K, ctx.grouping);
    cfg.graph = graph;
    cfg.detection = detection;
    const double horizon = std::max(ctx.T, 2);
    cfg.delta = params.real("delta", 1.0 / horizon);
    if (params.has("n_g")) {
        const double n_g = params.real("n_g", 1.0);
        cfg.p = std::sqrt(n_g * ctx.K * std::log(horizon) / horizon);
    }
    cfg.p = params.real("p", cfg.p);
    if (!(cfg.p > 0.0 && cfg.p < 1.0)) throw std::invalid_argument("exploration probability p must lie in (0, 1)");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");

    const std::string threshold = params.text("threshold", "practical");
    if (threshold == "practical") {
        cfg.threshold = ThresholdMode::practical;
    } else if (threshold == "theoretical") {
        cfg.threshold = ThresholdMode::theoretical;
    } else {
        throw std::invalid_argument("threshold must be 'practical' or 'theoretical'");
    }
    const int stride = params.integer("stride", 1);
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    cfg.stride = static_cast<std::size_t>(stride);

    cfg.learner.lambda1 = params.real("lambda1", cfg.learner.lambda1);
    cfg.learner.lambda2 = params.real("lambda2", cfg.learner.lambda2);
    cfg.learner.epsilon_residual = params.real("epsilon", cfg.learner.epsilon_residual);
    cfg.learner.max_iters = params.integer("max_iters", cfg.learner.max_iters);
    cfg.learner.step_tolerance = params.real("tol", cfg.learner.step_tolerance);
    const std::string reg = params.text("regularizer", "l1");
    if (reg == "l1") {
        cfg.learner.regularizer = Regularizer::l1;
    } else if (reg == "dtv") {
        cfg.learner.regularizer = Regularizer::dtv;
        cfg.learner.allow_cycles = true;
    } else {
        throw std::invalid_argument("regularizer must be 'l1' or 'dtv'");
    }
    return cfg;
}

struct Entry {
    const char* name;
    RestartKind restart;
    GraphSource graph;
    ChangeDetection detection;
};

constexpr Entry kSemUcbEntries[] = {
    {"ps-sem-ucb-gr", RestartKind::group, GraphSource::learned, ChangeDetection::glr},
    {"ps-sem-ucb-lo", RestartKind::local, GraphSource::learned, ChangeDetection::glr},
    {"ps-sem-ucb-gl", RestartKind::global, GraphSource::learned, ChangeDetection::glr},
    {"glr-cucb", RestartKind::global, GraphSource::ground_truth, ChangeDetection::glr},
    {"glr-cucb-lo", RestartKind::local, GraphSource::ground_truth, ChangeDetection::glr},
    {"glr-cucb-gr", RestartKind::group, GraphSource::ground_truth, ChangeDetection::glr},
    {"orc-r", RestartKind::group, GraphSource::learned, ChangeDetection::oracle},
};

const Entry* find_entry(const std::string& name) {
    for (const auto& e : kSemUcbEntries) {
        if (name == e.name) return &e;
    }
    return nullptr;
}

}  // namespace

const std::vector<std::string>& registered_policies() {
    static const std::vector<std::string> names{"ps-sem-ucb-gr", "ps-sem-ucb-lo", "ps-sem-ucb-gl", "glr-cucb", "glr-cucb-lo",
                                                "glr-cucb-gr",   "cucb-sw",       "cts",           "orc-r"};
    return names;
}

bool is_registered(const std::string& name) {
    const auto& names = registered_policies();
    return std::find(names.begin(), names.end(), name) != names.end();
}

std::vector<std::string> accepted_params(const std::string& name) {
    if (const Entry* e = find_entry(name)) {
        return e->graph == GraphSource::learned ? concat(kSemUcbParams, kLearnerParams) : kSemUcbParams;
    }
    if (name == "cucb-sw") return {"window"};
    if (name == "cts") return {};
    throw std::invalid_argument("unknown policy: " + name);
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const PolicyContext& context, Rng rng) {
    const Params params(spec, accepted_params(spec.name));
    if (const Entry* e = find_entry(spec.name)) {
        return std::make_unique<SemUcbPolicy>(spec.name, context,
                                              sem_ucb_config(params, context, e->restart, e->graph, e->detection), rng);
    }
    if (spec.name == "cucb-sw") {
        const double horizon = std::max(context.T, 2);
        const int fallback = static_cast<int>(std::ceil(std::sqrt(horizon * std::log(horizon))));
        return std::make_unique<SlidingWindowCucb>(context, params.integer("window", fallback));
    }
    return std::make_unique<CombinatorialThompson>(context, rng);
}

}  // namespace csb
