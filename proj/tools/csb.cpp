// csb: scenario generation, experiments, bound tables and regret plots.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "csb/bounds.hpp"
#include "csb/harness.hpp"
#include "csb/plot.hpp"
#include "csb/registry.hpp"
#include "csb/scenario.hpp"

namespace {

// JSON config: one object per subcommand, keys are long flag names.
//   {"run": {"scenario": "s.json", "policies": ["cts"], "reps": 5}}
class JsonConfig : public CLI::Config {
  public:
    explicit JsonConfig(std::vector<std::string> sections) : sections_(std::move(sections)) {}

    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!doc.is_object()) throw CLI::ConversionError("config must be a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [section, body] : doc.items()) {
            if (std::find(sections_.begin(), sections_.end(), section) == sections_.end()) {
                throw CLI::ConversionError("config has unknown section '" + section + "'");
            }
            if (!body.is_object()) throw CLI::ConversionError("config section '" + section + "' must be an object");
            for (const auto& [key, value] : body.items()) {
                CLI::ConfigItem item;
                item.parents = {section};
                item.name = key;
                if (value.is_array()) {
                    for (const auto& v : value) item.inputs.push_back(scalar(v));
                } else {
                    item.inputs.push_back(scalar(value));
                }
                items.push_back(std::move(item));
            }
        }
        return items;
    }

  private:
    std::vector<std::string> sections_;

    static std::string scalar(const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }
};

struct GenerateArgs {
    std::string out;
    std::uint64_t seed = 0;
    bool paper_defaults = false;
    csb::GeneratorParams params;
    std::vector<int> changes;
    std::vector<double> weights;
};

struct RunArgs {
    std::string scenario;
    std::vector<std::string> policies;
    std::vector<std::string> params;
    int reps = 20;
    std::uint64_t seed = 0;
    std::string out;
    int threads = 0;
};

struct BoundsArgs {
    std::string from_scenario;
    csb::BoundParams params;
    std::vector<std::string> groups;
    double delta = -1.0;
    double p = -1.0;
    double c1 = 1.0;
    double c2 = 1.0;
    double eta = 1.0;
    double s = 0.0;
};

struct PlotArgs {
    std::string input;
    std::string out;
    std::string scenario;
};

std::vector<int> default_groups(int k) {
    if (k < 3) return std::vector<int>(static_cast<std::size_t>(k), 1);
    std::vector<int> sizes(3, k / 3);
    for (int i = 0; i < k % 3; ++i) ++sizes[static_cast<std::size_t>(i)];
    return sizes;
}

int do_generate(GenerateArgs& a, const CLI::App& sub) {
    csb::GeneratorParams& q = a.params;
    if (!a.paper_defaults) {
        if (sub.count("--groups") == 0) q.group_sizes = default_groups(q.K);
        if (sub.count("--m") == 0) q.m = std::min(4, q.K);
    }
    if (!a.changes.empty()) {
        q.graph_changes = a.changes[0];
        q.dist_changes = a.changes[1];
    }
    if (!a.weights.empty()) {
        q.weight_lo = a.weights[0];
        q.weight_hi = a.weights[1];
    }
    csb::Rng rng = csb::Rng(a.seed).split(csb::Stream::generator);
    const csb::Scenario scenario = csb::generate_synthetic_scenario(q, rng);
    const std::string text = csb::scenario_to_json(scenario).dump(2) + "\n";
    csb::write_file_atomic(a.out, [&](std::ostream& os) { os << text; });
    std::cout << "wrote " << a.out << ": K=" << scenario.K << " T=" << scenario.T << " m=" << scenario.m
              << " graph segments=" << scenario.graph_segments.size()
              << " distribution segments=" << scenario.dist_segments.size() << "\n";
    return 0;
}

std::vector<csb::PolicySpec> parse_policies(const RunArgs& a) {
    if (a.policies.empty()) throw std::invalid_argument("no policies given");
    std::vector<csb::PolicySpec> specs;
    for (const auto& name : a.policies) {
        if (!csb::is_registered(name)) throw std::invalid_argument("unknown policy: " + name);
        specs.push_back({name, {}});
    }
    for (const auto& entry : a.params) {
        const auto eq = entry.find('=');
        const auto dot = entry.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            throw std::invalid_argument("--param expects policy.key=value, got '" + entry + "'");
        }
        const std::string name = entry.substr(0, dot);
        const std::string key = entry.substr(dot + 1, eq - dot - 1);
        bool matched = false;
        for (auto& spec : specs) {
            if (spec.name == name) {
                spec.params[key] = entry.substr(eq + 1);
                matched = true;
            }
        }
        if (!matched) throw std::invalid_argument("--param refers to a policy not being run: " + name);
    }
    return specs;
}

int do_run(const RunArgs& a) {
    const csb::Scenario scenario = csb::load_scenario(a.scenario);
    csb::ExperimentConfig config;
    config.policies = parse_policies(a);
    config.replications = a.reps;
    config.master_seed = a.seed;
    config.threads = a.threads;
    const csb::MetricsBundle metrics = csb::run_experiment(scenario, config);

    const std::filesystem::path dir(a.out);
    std::filesystem::create_directories(dir);
    csb::write_file_atomic(dir / "rounds.csv", [&](std::ostream& os) { csb::write_rounds_csv(os, metrics); });
    csb::write_file_atomic(dir / "aggregate.csv", [&](std::ostream& os) { csb::write_aggregate_csv(os, metrics); });
    csb::write_file_atomic(dir / "events.csv", [&](std::ostream& os) { csb::write_events_csv(os, metrics); });

    std::cout << std::left << std::setw(16) << "policy" << std::right << std::setw(14) << "final regret"
              << std::setw(10) << "se" << std::setw(12) << "detections" << std::setw(10) << "relearns"
              << std::setw(12) << "final mse" << "\n";
    for (const auto& pm : metrics.policies) {
        long detections = 0;
        long relearns = 0;
        for (const auto& rep : pm.replications) {
            detections += std::accumulate(rep.detections.begin(), rep.detections.end(), 0L);
            relearns += rep.graph_relearns;
        }
        std::ostringstream mse;
        if (std::isnan(pm.mean_mse.back())) {
            mse << "-";
        } else {
            mse << std::scientific << std::setprecision(2) << pm.mean_mse.back();
        }
        std::cout << std::left << std::setw(16) << pm.name << std::right << std::fixed << std::setprecision(2)
                  << std::setw(14) << pm.final_mean() << std::setw(10) << pm.final_se() << std::setw(12) << detections
                  << std::setw(10) << relearns << std::setw(12) << mse.str() << "\n";
    }
    std::cout << "wrote rounds.csv, aggregate.csv, events.csv to " << dir.string() << "\n";
    return 0;
}

int do_bounds(BoundsArgs& a, const CLI::App& sub) {
    csb::BoundParams q = a.params;
    if (!a.from_scenario.empty()) {
        const csb::Scenario scenario = csb::load_scenario(a.from_scenario);
        const double t = scenario.T;
        const double delta = a.delta >= 0.0 ? a.delta : 1.0 / t;
        const double n_g = csb::total_group_segments(scenario);
        const double p = a.p >= 0.0 ? a.p : std::min(0.999, std::sqrt(n_g * scenario.K * std::log(t) / t));
        q = csb::params_from_scenario(scenario, delta, p, a.params.d);
    } else {
        q.delta = std::max(a.delta, 0.0);
        q.p = std::max(a.p, 0.0);
        if (!a.groups.empty()) {
            q.group_profile.clear();
            for (const auto& g : a.groups) {
                const auto colon = g.find(':');
                if (colon == std::string::npos) throw std::invalid_argument("--groups expects N_g:K_g, got '" + g + "'");
                q.group_profile.push_back({std::stoi(g.substr(0, colon)), std::stoi(g.substr(colon + 1))});
            }
        } else if (sub.count("--K") > 0) {
            q.group_profile = {{1, q.K}};
        }
    }

    std::cout << std::setprecision(10);
    std::cout << "parameters: omega_max=" << q.omega_max << " m=" << q.m << " K=" << q.K << " T=" << q.T
              << " delta_min=" << q.delta_min << " delta_max=" << q.delta_max << " delta=" << q.delta << " p=" << q.p
              << " d=" << q.d << " N_G=" << q.N_G() << " N_W=" << q.N_W << " delta_min_change=" << q.delta_min_change
              << "\n";
    std::cout << "lemma1_bound     " << csb::lemma1_bound(q) << "\n";
    std::cout << "theorem1_bound   " << csb::theorem1_bound(q) << "\n";
    std::cout << "corollary_bound  " << csb::corollary_bound(q) << "  (order bound, constants set to 1)\n";
    std::cout << "remark1 increments (C1=" << a.c1 << ", C2=" << a.c2 << ", eta=" << a.eta << ", s=" << a.s
              << ", K=" << q.K << ")\n";
    std::cout << "kappa,local,global,group,group_with_unchanged\n";
    for (int kappa = 1; kappa <= q.K; ++kappa) {
        std::cout << kappa;
        for (auto c : {csb::RestartCase::local, csb::RestartCase::global, csb::RestartCase::group,
                       csb::RestartCase::group_with_unchanged}) {
            std::cout << ',' << csb::remark1_increment(c, a.c1, a.c2, kappa, a.eta, a.s, q.K);
        }
        std::cout << "\n";
    }
    return 0;
}

int do_plot(const PlotArgs& a) {
    std::ifstream in(a.input);
    if (!in) throw std::runtime_error("cannot open " + a.input);
    const auto curves = csb::read_aggregate_csv(in);
    csb::PlotMarkers markers;
    if (!a.scenario.empty()) {
        const csb::Scenario scenario = csb::load_scenario(a.scenario);
        markers.dist_changes = scenario.dist_change_rounds();
        markers.graph_changes = scenario.graph_change_rounds();
    }
    const std::string svg = csb::render_regret_svg(curves, markers);
    csb::write_file_atomic(a.out, [&](std::ostream& os) { os << svg; });
    std::cout << "wrote " << a.out << " (" << curves.size() << " curves)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Piecewise-stationary causal combinatorial semi-bandit simulator"};
    app.config_formatter(std::make_shared<JsonConfig>(std::vector<std::string>{"generate", "run", "bounds", "plot"}));
    app.set_config("--config", "", "JSON config with one object per subcommand; flags override it");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.fallthrough();
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Write a synthetic scenario as JSON");
    g->add_option("--out", gen.out, "Output scenario file")->required();
    g->add_option("--seed", gen.seed, "Random seed");
    auto* paper = g->add_flag("--paper-defaults", gen.paper_defaults,
                              "K=18, m=4, T=25000, three groups of 6, 4+4 changes, density 0.15, weights U[0.1,0.9]");
    std::vector<CLI::Option*> custom{
        g->add_option("--K", gen.params.K, "Number of arms")->check(CLI::PositiveNumber),
        g->add_option("--T", gen.params.T, "Horizon")->check(CLI::PositiveNumber),
        g->add_option("--m", gen.params.m, "Super-arm size")->check(CLI::PositiveNumber),
        g->add_option("--groups", gen.params.group_sizes, "Group sizes (default: three near-equal groups)"),
        g->add_option("--changes", gen.changes, "Graph changes and distribution changes")->expected(2),
        g->add_option("--density", gen.params.density, "Edge density of every DAG"),
        g->add_option("--weights", gen.weights, "Edge weight range lo hi")->expected(2),
        g->add_option("--noise", gen.params.noise_scale, "Noise scale of the truncated normals"),
        g->add_option("--groups-per-change", gen.params.groups_per_change,
                      "Groups given new means at each distribution change (0 = random subset)"),
    };
    for (auto* opt : custom) paper->excludes(opt);

    RunArgs run;
    auto* r = app.add_subcommand("run", "Run replicated episodes and write CSV results");
    r->add_option("--scenario", run.scenario, "Scenario JSON")->required();
    r->add_option("--policies", run.policies, "Comma-separated policy names")->delimiter(',')->required();
    r->add_option("--param", run.params, "Policy parameter as policy.key=value (repeatable)");
    r->add_option("--reps", run.reps, "Replications")->check(CLI::PositiveNumber);
    r->add_option("--seed", run.seed, "Master seed");
    r->add_option("--out", run.out, "Output directory")->required();
    r->add_option("--threads", run.threads, "Worker threads (0 = all cores, capped by CSB_THREADS)");

    BoundsArgs bnd;
    bnd.params.T = std::numbers::e;
    auto* b = app.add_subcommand("bounds", "Print regret bounds and the restart comparison table");
    auto* from = b->add_option("--from-scenario", bnd.from_scenario, "Derive parameters from a scenario");
    std::vector<CLI::Option*> manual{
        b->add_option("--omega", bnd.params.omega_max, "omega_max"),
        b->add_option("--m", bnd.params.m, "Super-arm size"),
        b->add_option("--K", bnd.params.K, "Number of arms"),
        b->add_option("--T", bnd.params.T, "Horizon (default e)"),
        b->add_option("--delta-min", bnd.params.delta_min, "Smallest positive gap"),
        b->add_option("--delta-max", bnd.params.delta_max, "Largest gap"),
        b->add_option("--groups", bnd.groups, "Group profile entries N_g:K_g"),
        b->add_option("--N-W", bnd.params.N_W, "Graph segment count"),
        b->add_option("--delta-change", bnd.params.delta_min_change, "Smallest change magnitude"),
    };
    for (auto* opt : manual) from->excludes(opt);
    b->add_option("--delta", bnd.delta, "GLR confidence (default 1/T from a scenario, else 0)");
    b->add_option("--p", bnd.p, "Exploration probability (default tuned from a scenario, else 0)");
    b->add_option("--d", bnd.params.d, "Largest detection delay");
    b->add_option("--C1", bnd.c1, "Remark table: per-arm cost");
    b->add_option("--C2", bnd.c2, "Remark table: per-restart cost");
    b->add_option("--eta", bnd.eta, "Remark table: changed groups");
    b->add_option("--s", bnd.s, "Remark table: unchanged arms in changed groups");

    PlotArgs plot;
    auto* p = app.add_subcommand("plot", "Render aggregate.csv as an SVG regret plot");
    p->add_option("--input", plot.input, "aggregate.csv from run")->required();
    p->add_option("--out", plot.out, "SVG output")->required();
    p->add_option("--scenario", plot.scenario, "Scenario JSON for change markers");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (g->parsed()) return do_generate(gen, *g);
        if (r->parsed()) return do_run(run);
        if (b->parsed()) return do_bounds(bnd, *b);
        if (p->parsed()) return do_plot(plot);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
