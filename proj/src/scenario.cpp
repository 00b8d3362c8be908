#include "csb/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace csb {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw std::invalid_argument("scenario: " + what); }

template <class Segments>
std::size_t segment_index_at(const Segments& segments, int t) {
    // Last segment whose start is <= t.
    auto it = std::upper_bound(segments.begin(), segments.end(), t,
                               [](int round, const auto& seg) { return round < seg.start; });
    if (it == segments.begin()) invalid("round " + std::to_string(t) + " precedes the first segment");
    return static_cast<std::size_t>(std::distance(segments.begin(), it) - 1);
}

bool same_distribution(const DistSegment& a, const DistSegment& b, int k) {
    return a.mu(k) == b.mu(k) && a.noise_scale == b.noise_scale;
}

}  // namespace

void Scenario::validate() const {
    if (K < 1) invalid("K must be >= 1");
    if (T < 1) invalid("T must be >= 1");
    if (m < 1 || m > K) invalid("m must lie in [1, K]");
    if (c.size() != K) invalid("c must have K entries");
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        if (c(k) != 0.0 && c(k) != 1.0) invalid("c must be binary");
    }

    if (graph_segments.empty() || graph_segments.front().start != 1) invalid("first graph segment must start at 1");
    for (std::size_t i = 0; i < graph_segments.size(); ++i) {
        const auto& seg = graph_segments[i];
        if (seg.graph.size() != K) invalid("graph segment " + std::to_string(i) + " is not K x K");
        if (seg.start > T) invalid("graph segment starts after T");
        if (i > 0 && seg.start - graph_segments[i - 1].start < K + 1) {
            invalid("graph changes must be at least K+1 rounds apart");
        }
    }

    if (dist_segments.empty() || dist_segments.front().start != 1) invalid("first distribution segment must start at 1");
    for (std::size_t i = 0; i < dist_segments.size(); ++i) {
        const auto& seg = dist_segments[i];
        if (seg.mu.size() != K) invalid("distribution segment " + std::to_string(i) + " needs K means");
        if ((seg.mu.array() < 0.0).any() || (seg.mu.array() > 1.0).any()) invalid("means must lie in [0, 1]");
        if (!(seg.noise_scale >= 0.0)) invalid("noise_scale must be >= 0");
        if (seg.start > T) invalid("distribution segment starts after T");
        if (i > 0 && seg.start <= dist_segments[i - 1].start) invalid("distribution segment starts must increase");
    }

    std::vector<int> seen(static_cast<std::size_t>(K), 0);
    for (const auto& g : grouping) {
        if (g.empty()) invalid("groups must be nonempty");
        for (int a : g) {
            if (a < 0 || a >= K) invalid("group member out of range");
            if (seen[static_cast<std::size_t>(a)]++) invalid("groups must be disjoint");
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) invalid("groups must cover every arm");
}

std::size_t Scenario::graph_index_at(int t) const { return segment_index_at(graph_segments, t); }

std::size_t Scenario::dist_index_at(int t) const { return segment_index_at(dist_segments, t); }

Vector Scenario::true_means(std::size_t dist_index) const {
    const auto& seg = dist_segments.at(dist_index);
    return truncated_normal_means(seg.mu, seg.noise_scale);
}

std::vector<int> Scenario::group_of_arm() const {
    std::vector<int> out(static_cast<std::size_t>(K), -1);
    for (std::size_t g = 0; g < grouping.size(); ++g) {
        for (int a : grouping[g]) out[static_cast<std::size_t>(a)] = static_cast<int>(g);
    }
    return out;
}

std::vector<int> Scenario::graph_change_rounds() const {
    std::vector<int> out;
    for (std::size_t i = 1; i < graph_segments.size(); ++i) out.push_back(graph_segments[i].start);
    return out;
}

std::vector<int> Scenario::dist_change_rounds() const {
    std::vector<int> out;
    for (std::size_t i = 1; i < dist_segments.size(); ++i) out.push_back(dist_segments[i].start);
    return out;
}

std::vector<int> Scenario::changed_arms(std::size_t dist_index) const {
    std::vector<int> out;
    if (dist_index == 0 || dist_index >= dist_segments.size()) return out;
    for (int k = 0; k < K; ++k) {
        if (!same_distribution(dist_segments[dist_index - 1], dist_segments[dist_index], k)) out.push_back(k);
    }
    return out;
}

int group_segment_count(const Scenario& scenario, const Group& g) {
    int count = 1;
    for (std::size_t i = 1; i < scenario.dist_segments.size(); ++i) {
        const bool changed = std::any_of(g.begin(), g.end(), [&](int k) {
            return !same_distribution(scenario.dist_segments[i - 1], scenario.dist_segments[i], k);
        });
        if (changed) ++count;
    }
    return count;
}

int total_group_segments(const Scenario& scenario) {
    int total = 0;
    for (const auto& g : scenario.grouping) total += group_segment_count(scenario, g);
    return total;
}

Grouping singleton_grouping(int k) {
    Grouping out;
    for (int a = 0; a < k; ++a) out.push_back({a});
    return out;
}

Grouping global_grouping(int k) {
    Group all(static_cast<std::size_t>(k));
    std::iota(all.begin(), all.end(), 0);
    return {all};
}

AdjacencyMatrix random_dag(int k, double density, double lo, double hi, Rng& rng) {
    if (k < 1) throw std::invalid_argument("random_dag: K must be >= 1");
    if (density < 0.0 || density > 0.5) throw std::invalid_argument("random_dag: density must lie in [0, 0.5]");
    if (lo < 0.0 || hi < lo) throw std::invalid_argument("random_dag: weight range must satisfy 0 <= lo <= hi");

    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    // Candidate edges go from earlier to later nodes in the order.
    std::vector<std::pair<int, int>> candidates;
    for (int a = 0; a < k; ++a) {
        for (int b = a + 1; b < k; ++b) candidates.emplace_back(order[static_cast<std::size_t>(a)], order[static_cast<std::size_t>(b)]);
    }
    const auto edges = static_cast<std::size_t>(std::lround(density * k * (k - 1)));
    Matrix w = Matrix::Zero(k, k);
    for (const auto& [parent, child] : rng.sample(candidates, edges)) {
        w(child, parent) = rng.uniform(lo, hi);
    }
    return AdjacencyMatrix(std::move(w), true);
}

Scenario generate_synthetic_scenario(const GeneratorParams& p, Rng& rng) {
    auto bad = [](const std::string& what) { throw std::invalid_argument("generator: " + what); };
    if (p.K < 1 || p.T < 1) bad("K and T must be >= 1");
    if (p.m < 1 || p.m > p.K) bad("m must lie in [1, K]");
    if (p.group_sizes.empty()) bad("at least one group is required");
    if (std::any_of(p.group_sizes.begin(), p.group_sizes.end(), [](int s) { return s < 1; })) bad("group sizes must be >= 1");
    if (std::accumulate(p.group_sizes.begin(), p.group_sizes.end(), 0) != p.K) bad("group sizes must sum to K");
    if (p.graph_changes < 0 || p.dist_changes < 0) bad("change counts must be >= 0");
    if (p.dist_changes + 1 > p.T) bad("too many distribution changes for the horizon");
    if (static_cast<long long>(p.graph_changes) * (p.K + 1) > p.T - 1) bad("graph changes too dense for the K+1 gap");
    if (p.noise_scale < 0.0) bad("noise_scale must be >= 0");
    const int n_groups = static_cast<int>(p.group_sizes.size());
    if (p.groups_per_change < 0 || p.groups_per_change > n_groups) bad("groups_per_change out of range");

    Scenario s;
    s.K = p.K;
    s.T = p.T;
    s.m = p.m;
    s.c = Vector::Ones(p.K);

    int next = 0;
    for (int size : p.group_sizes) {
        Group g(static_cast<std::size_t>(size));
        std::iota(g.begin(), g.end(), next);
        next += size;
        s.grouping.push_back(std::move(g));
    }

    // Graph changes: the i-th change sits (i+1)(K+1) rounds after round 1 plus
    // a sorted random share of the slack, which keeps every gap >= K+1.
    const int slack = p.T - 1 - p.graph_changes * (p.K + 1);
    std::vector<int> offsets;
    for (int i = 0; i < p.graph_changes; ++i) offsets.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(slack) + 1)));
    std::sort(offsets.begin(), offsets.end());
    s.graph_segments.push_back({1, random_dag(p.K, p.density, p.weight_lo, p.weight_hi, rng)});
    for (int i = 0; i < p.graph_changes; ++i) {
        const int start = 1 + (i + 1) * (p.K + 1) + offsets[static_cast<std::size_t>(i)];
        s.graph_segments.push_back({start, random_dag(p.K, p.density, p.weight_lo, p.weight_hi, rng)});
    }

    Vector mu(p.K);
    for (int k = 0; k < p.K; ++k) mu(k) = rng.uniform();
    s.dist_segments.push_back({1, mu, p.noise_scale});
    std::vector<int> group_ids(static_cast<std::size_t>(n_groups));
    std::iota(group_ids.begin(), group_ids.end(), 0);
    for (int i = 1; i <= p.dist_changes; ++i) {
        const int start = 1 + static_cast<int>(static_cast<long long>(i) * p.T / (p.dist_changes + 1));
        int count = p.groups_per_change;
        if (count == 0) count = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_groups)));
        auto changed = rng.sample(group_ids, static_cast<std::size_t>(count));
        std::sort(changed.begin(), changed.end());
        for (int g : changed) {
            for (int k : s.grouping[static_cast<std::size_t>(g)]) mu(k) = rng.uniform();
        }
        s.dist_segments.push_back({start, mu, p.noise_scale});
    }

    s.validate();
    return s;
}

nlohmann::json scenario_to_json(const Scenario& s) {
    using nlohmann::json;
    auto vec = [](const Vector& v) {
        json out = json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
        return out;
    };
    json doc;
    doc["K"] = s.K;
    doc["T"] = s.T;
    doc["m"] = s.m;
    doc["c"] = vec(s.c);
    doc["grouping"] = s.grouping;
    doc["graph_segments"] = json::array();
    for (const auto& seg : s.graph_segments) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < seg.graph.weights().rows(); ++i) rows.push_back(vec(seg.graph.weights().row(i).transpose()));
        doc["graph_segments"].push_back({{"start", seg.start}, {"dag_constrained", seg.graph.dag_constrained()}, {"W", rows}});
    }
    doc["dist_segments"] = json::array();
    for (const auto& seg : s.dist_segments) {
        doc["dist_segments"].push_back({{"start", seg.start}, {"mu", vec(seg.mu)}, {"noise_scale", seg.noise_scale}});
    }
    return doc;
}

Scenario scenario_from_json(const nlohmann::json& doc) {
    auto vec = [](const nlohmann::json& arr) {
        Vector v(static_cast<Eigen::Index>(arr.size()));
        for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr.at(i).get<double>();
        return v;
    };
    try {
        Scenario s;
        s.K = doc.at("K").get<int>();
        s.T = doc.at("T").get<int>();
        s.m = doc.at("m").get<int>();
        s.c = doc.contains("c") ? vec(doc.at("c")) : Vector::Ones(s.K);
        s.grouping = doc.contains("grouping") ? doc.at("grouping").get<Grouping>() : singleton_grouping(s.K);
        for (const auto& seg : doc.at("graph_segments")) {
            const auto& rows = seg.at("W");
            Matrix w(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != rows.size()) invalid("W must be square");
                for (std::size_t j = 0; j < rows.size(); ++j) {
                    w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
                }
            }
            s.graph_segments.push_back({seg.at("start").get<int>(), AdjacencyMatrix(std::move(w), seg.value("dag_constrained", true))});
        }
        for (const auto& seg : doc.at("dist_segments")) {
            s.dist_segments.push_back({seg.at("start").get<int>(), vec(seg.at("mu")), seg.value("noise_scale", 0.05)});
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        invalid(std::string("malformed document: ") + e.what());
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("scenario file " + path + " is not valid JSON: " + e.what());
    }
    return scenario_from_json(doc);
}

}  // namespace csb
