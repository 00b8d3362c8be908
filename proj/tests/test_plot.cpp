#include <doctest.h>

#include <cmath>
#include <regex>
#include <sstream>

#include "csb/harness.hpp"
#include "csb/plot.hpp"

using namespace csb;

namespace {

// Attribute values of every element with the given class.
std::vector<std::string> elements(const std::string& svg, const std::string& cls) {
    std::vector<std::string> out;
    const std::regex re("<[a-z]+ class=\"" + cls + "\"[^>]*>");
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
        out.push_back(it->str());
    }
    return out;
}

double attribute(const std::string& element, const std::string& name) {
    std::smatch m;
    const std::regex re(" " + name + "=\"([-0-9.e+]+)\"");
    REQUIRE(std::regex_search(element, m, re));
    return std::stod(m[1]);
}

std::vector<std::pair<double, double>> points(const std::string& polyline) {
    std::smatch m;
    REQUIRE(std::regex_search(polyline, m, std::regex(" points=\"([^\"]*)\"")));
    std::vector<std::pair<double, double>> out;
    std::istringstream in(m[1].str());
    std::string pair;
    while (in >> pair) {
        const auto comma = pair.find(',');
        out.emplace_back(std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1)));
    }
    return out;
}

}  // namespace

TEST_CASE("read_aggregate_csv") {
    std::istringstream in(
        "policy,t,mean,se,lower,upper,mean_mse\n"
        "a,1,0.5,0,0.5,0.5,nan\n"
        "a,2,1.5,0,1.5,1.5,nan\n"
        "b,1,0,0,0,0,0.1\n");
    const auto curves = read_aggregate_csv(in);
    REQUIRE(curves.size() == 2);
    CHECK(curves[0].policy == "a");
    CHECK(curves[0].t == std::vector<int>{1, 2});
    CHECK(curves[0].mean == std::vector<double>{0.5, 1.5});
    CHECK(curves[1].policy == "b");

    for (const char* bad : {"", "foo,bar\n", "policy,t,mean\na,1\n", "policy,t,mean\na,x,1\n",
                            "policy,t,mean\na,2,1\na,1,2\n", "policy,t,mean\n", "policy,t,mean\na,1,inf\n"}) {
        std::istringstream b(bad);
        CHECK_THROWS_AS(read_aggregate_csv(b), std::runtime_error);
    }
}

TEST_CASE("regret plot from a real run") {
    GeneratorParams p;
    p.K = 6;
    p.T = 4000;
    p.m = 2;
    p.group_sizes = {3, 3};
    p.graph_changes = 2;
    p.dist_changes = 3;
    Rng rng(12);
    const Scenario s = generate_synthetic_scenario(p, rng);
    ExperimentConfig cfg;
    cfg.policies = {{"ps-sem-ucb-gr", {}}};
    cfg.replications = 2;
    std::stringstream csv;
    write_aggregate_csv(csv, run_experiment(s, cfg));

    const auto curves = read_aggregate_csv(csv);
    REQUIRE(curves.size() == 1);
    const PlotMarkers markers{s.dist_change_rounds(), s.graph_change_rounds()};
    const std::string svg = render_regret_svg(curves, markers, 500);
    CHECK(svg.rfind("<svg", 0) == 0);

    const auto lines = elements(svg, "curve");
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].find("data-policy=\"ps-sem-ucb-gr\"") != std::string::npos);
    const auto pts = points(lines[0]);
    CHECK(pts.size() <= 501);
    CHECK(pts.size() >= 400);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        CHECK(pts[i].first > pts[i - 1].first);
        CHECK(pts[i].second <= pts[i - 1].second + 1e-9);  // SVG y grows downward
    }

    // Map x back to rounds: the first and last vertices anchor the axis.
    const double x0 = pts.front().first;
    const double x1 = pts.back().first;
    auto round_of = [&](double x) { return 1.0 + (x - x0) * (s.T - 1) / (x1 - x0); };
    auto check_markers = [&](const std::string& cls, const std::vector<int>& expected) {
        const auto found = elements(svg, cls);
        REQUIRE(found.size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            CHECK(attribute(found[i], "x1") == attribute(found[i], "x2"));
            CHECK(std::abs(round_of(attribute(found[i], "x1")) - expected[i]) < 1.0);
        }
    };
    CHECK(markers.dist_changes.size() == 3);
    CHECK(markers.graph_changes.size() == 2);
    check_markers("dist-change", markers.dist_changes);
    check_markers("graph-change", markers.graph_changes);
}

TEST_CASE("thinning keeps the last vertex") {
    RegretCurve c{"x", {}, {}};
    for (int t = 1; t <= 1001; ++t) {
        c.t.push_back(t);
        c.mean.push_back(t);
    }
    const auto pts = points(elements(render_regret_svg({c}, {}, 100), "curve").at(0));
    CHECK(pts.size() <= 101);
    CHECK(pts.back().first == doctest::Approx(70.0 + 550.0));
}
