#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "csb/scenario.hpp"
#include "oracles.hpp"

using namespace csb;

namespace {

Scenario two_group_scenario() {
    Scenario s;
    s.K = 4;
    s.T = 100;
    s.m = 2;
    s.c = Vector::Ones(4);
    s.grouping = {{0, 1}, {2, 3}};
    s.graph_segments.push_back({1, AdjacencyMatrix::zero(4)});
    Vector mu(4);
    mu << 0.1, 0.2, 0.3, 0.4;
    s.dist_segments.push_back({1, mu, 0.05});
    return s;
}

GeneratorParams small_params() {
    GeneratorParams p;
    p.K = 5;
    p.T = 200;
    p.m = 2;
    p.group_sizes = {2, 3};
    p.graph_changes = 0;
    p.dist_changes = 0;
    return p;
}

}  // namespace

TEST_CASE("group_segment_count") {
    Scenario s = two_group_scenario();
    CHECK(group_segment_count(s, s.grouping[0]) == 1);
    CHECK(group_segment_count(s, s.grouping[1]) == 1);

    Vector mu = s.dist_segments[0].mu;
    mu(0) = 0.9;
    s.dist_segments.push_back({50, mu, 0.05});
    CHECK(group_segment_count(s, s.grouping[0]) == 2);
    CHECK(group_segment_count(s, s.grouping[1]) == 1);

    // Both arms of group 0 change together: one indicator.
    mu(0) = 0.5;
    mu(1) = 0.6;
    s.dist_segments.push_back({80, mu, 0.05});
    CHECK(group_segment_count(s, s.grouping[0]) == 3);
    CHECK(total_group_segments(s) == 4);
    CHECK(s.changed_arms(2) == std::vector<int>{0, 1});
}

TEST_CASE("N_G sums the group counts for any grouping") {
    Rng rng(8);
    GeneratorParams p;
    p.K = 9;
    p.T = 2000;
    p.m = 2;
    p.group_sizes = {3, 3, 3};
    p.graph_changes = 2;
    p.dist_changes = 4;
    for (int trial = 0; trial < 20; ++trial) {
        Scenario s = generate_synthetic_scenario(p, rng);
        int manual = 0;
        for (const auto& g : s.grouping) {
            // Count boundaries where some member changes, directly on mu.
            int count = 1;
            for (std::size_t i = 1; i < s.dist_segments.size(); ++i) {
                bool any = false;
                for (int k : g) any = any || s.dist_segments[i].mu(k) != s.dist_segments[i - 1].mu(k);
                count += any ? 1 : 0;
            }
            manual += count;
        }
        CHECK(total_group_segments(s) == manual);
        s.grouping = singleton_grouping(9);
        CHECK(total_group_segments(s) >= manual);
    }
}

TEST_CASE("scenario validation") {
    Scenario s = two_group_scenario();
    CHECK_NOTHROW(s.validate());

    Scenario overlap = s;
    overlap.grouping = {{0, 1}, {1, 2, 3}};
    CHECK_THROWS_AS(overlap.validate(), std::invalid_argument);

    Scenario missing = s;
    missing.grouping = {{0, 1}, {2}};
    CHECK_THROWS_AS(missing.validate(), std::invalid_argument);

    Scenario close = s;
    close.graph_segments.push_back({1 + s.K, AdjacencyMatrix::zero(4)});
    CHECK_THROWS_AS(close.validate(), std::invalid_argument);
    close.graph_segments.back().start = 2 + s.K;
    CHECK_NOTHROW(close.validate());

    Scenario bad_m = s;
    bad_m.m = 5;
    CHECK_THROWS_AS(bad_m.validate(), std::invalid_argument);

    Scenario bad_mu = s;
    bad_mu.dist_segments[0].mu(2) = 1.5;
    CHECK_THROWS_AS(bad_mu.validate(), std::invalid_argument);
}

TEST_CASE("generator: no changes gives one segment of each kind") {
    Rng rng(1);
    const Scenario s = generate_synthetic_scenario(small_params(), rng);
    CHECK(s.graph_segments.size() == 1);
    CHECK(s.dist_segments.size() == 1);
    CHECK(s.K == 5);
    CHECK(s.grouping == Grouping{{0, 1}, {2, 3, 4}});
}

TEST_CASE("generator: --paper-defaults preset") {
    Rng rng(7);
    const GeneratorParams p;
    CHECK(p.K == 18);
    CHECK(p.T == 25000);
    CHECK(p.m == 4);
    CHECK(p.group_sizes == std::vector<int>{6, 6, 6});
    CHECK(p.density == doctest::Approx(0.15));
    CHECK(p.weight_lo == doctest::Approx(0.1));
    CHECK(p.weight_hi == doctest::Approx(0.9));

    const Scenario s = generate_synthetic_scenario(p, rng);
    CHECK(s.graph_segments.size() == 5);
    CHECK(s.dist_segments.size() == 5);
    const int edges = static_cast<int>(std::lround(0.15 * 18 * 17));
    for (const auto& seg : s.graph_segments) {
        CHECK(validate_dag(seg.graph.weights()));
        CHECK(oracle::pattern_nilpotent(seg.graph.weights()));
        const Matrix& w = seg.graph.weights();
        CHECK((w.array() != 0.0).count() == edges);
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const double v = w.data()[i];
            if (v != 0.0) {
                CHECK(v >= 0.1);
                CHECK(v <= 0.9);
            }
        }
    }
    // Equal-length distribution segments.
    const auto starts = s.dist_change_rounds();
    CHECK(starts == std::vector<int>{5001, 10001, 15001, 20001});
    // Changes are group-coordinated: a group changes entirely or not at all.
    for (std::size_t i = 1; i < s.dist_segments.size(); ++i) {
        const auto changed = s.changed_arms(i);
        CHECK_FALSE(changed.empty());
        for (const auto& g : s.grouping) {
            const auto inside = std::count_if(g.begin(), g.end(), [&](int k) {
                return std::find(changed.begin(), changed.end(), k) != changed.end();
            });
            CHECK((inside == 0 || inside == static_cast<long>(g.size())));
        }
    }
}

TEST_CASE("generator enforces the K+1 gap and rejects infeasible requests") {
    Rng rng(2);
    GeneratorParams p = small_params();
    p.T = 6 * 4 + 1;  // exactly room for four changes
    p.graph_changes = 4;
    for (int trial = 0; trial < 50; ++trial) {
        const Scenario s = generate_synthetic_scenario(p, rng);
        for (std::size_t i = 1; i < s.graph_segments.size(); ++i) {
            CHECK(s.graph_segments[i].start - s.graph_segments[i - 1].start >= p.K + 1);
        }
    }
    p.graph_changes = 5;
    CHECK_THROWS_AS(generate_synthetic_scenario(p, rng), std::invalid_argument);

    GeneratorParams sizes = small_params();
    sizes.group_sizes = {2, 2};
    CHECK_THROWS_AS(generate_synthetic_scenario(sizes, rng), std::invalid_argument);
}

TEST_CASE("generator is deterministic in its seed") {
    Rng a(99);
    Rng b(99);
    const auto sa = generate_synthetic_scenario(GeneratorParams{}, a);
    const auto sb = generate_synthetic_scenario(GeneratorParams{}, b);
    CHECK(scenario_to_json(sa).dump() == scenario_to_json(sb).dump());
}

TEST_CASE("random DAGs are nilpotent") {
    Rng rng(123);
    for (int trial = 0; trial < 2000; ++trial) {
        const int k = 1 + static_cast<int>(rng.below(20));
        const auto w = random_dag(k, rng.uniform(0.0, 0.5), 0.1, 0.9, rng);
        CHECK(oracle::pattern_nilpotent(w.weights()));
    }
}

TEST_CASE("JSON round trip") {
    Rng rng(4);
    GeneratorParams p = small_params();
    p.graph_changes = 2;
    p.dist_changes = 2;
    const Scenario s = generate_synthetic_scenario(p, rng);
    const auto doc = scenario_to_json(s);
    const Scenario back = scenario_from_json(doc);
    CHECK(scenario_to_json(back).dump() == doc.dump());
    CHECK(back.graph_change_rounds() == s.graph_change_rounds());
    CHECK(doc.at("graph_segments").at(0).at("W").size() == 5);  // row-major nested arrays
    CHECK(doc.at("dist_segments").at(0).at("start") == 1);

    auto broken = doc;
    broken.erase("T");
    CHECK_THROWS_AS(scenario_from_json(broken), std::invalid_argument);
}
