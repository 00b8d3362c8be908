#include <doctest.h>

#include <cmath>
#include <numbers>

#include "csb/scenario.hpp"
#include "csb/sem.hpp"
#include "oracles.hpp"

using namespace csb;

namespace {

Matrix zeros(int k) { return Matrix::Zero(k, k); }

DecisionVector arms_of(int k, std::vector<int> arms) { return DecisionVector::from_arms(k, arms); }

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

}  // namespace

TEST_CASE("validate_dag") {
    CHECK(validate_dag(zeros(3)));

    Matrix single = zeros(3);
    single(1, 0) = 0.5;
    CHECK(validate_dag(single));

    Matrix cycle = zeros(3);
    cycle(0, 1) = 0.3;
    cycle(1, 0) = 0.4;
    CHECK_FALSE(validate_dag(cycle));
    CHECK(validate_dag(cycle) == oracle::is_acyclic(cycle));

    Matrix diag = zeros(2);
    diag(1, 1) = 0.1;
    CHECK_THROWS_AS(validate_dag(diag), std::invalid_argument);
}

TEST_CASE("validate_dag agrees with the elimination oracle on random patterns") {
    Rng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        const int k = 2 + static_cast<int>(rng.below(7));
        Matrix w = zeros(k);
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
                if (i != j && rng.bernoulli(0.2)) w(i, j) = rng.uniform(0.1, 0.9);
            }
        }
        CHECK(validate_dag(w) == oracle::is_acyclic(w));
    }
}

TEST_CASE("AdjacencyMatrix invariants") {
    Matrix neg = zeros(2);
    neg(1, 0) = -0.1;
    CHECK_THROWS_AS(AdjacencyMatrix(neg, true), std::invalid_argument);

    Matrix cycle = zeros(2);
    cycle(0, 1) = 0.3;
    cycle(1, 0) = 0.4;
    CHECK_THROWS_AS(AdjacencyMatrix(cycle, true), std::invalid_argument);
    // Cyclic but contracting: accepted without the DAG flag.
    const AdjacencyMatrix ok(cycle, false);
    CHECK(is_sem_invertible(cycle));
    CHECK(spectral_radius(cycle) < 1.0);
    const Vector y = ok.solve(vec({1.0, 1.0}));
    CHECK(((Matrix::Identity(2, 2) - cycle) * y - vec({1.0, 1.0})).norm() < 1e-12);

    Matrix explosive = zeros(2);
    explosive(0, 1) = 2.0;
    explosive(1, 0) = 0.9;
    CHECK_FALSE(is_sem_invertible(explosive));
    CHECK_THROWS_AS(AdjacencyMatrix(explosive, false), NumericError);
}

TEST_CASE("truncated normal rewards") {
    Rng rng(3);
    const Vector mu = vec({0.3, 0.7});
    CHECK(draw_instantaneous_rewards(mu, 0.0, rng) == mu);

    for (int i = 0; i < 1000; ++i) {
        const Vector b = draw_instantaneous_rewards(vec({0.02, 0.5, 0.98}), 0.5, rng);
        CHECK(b.minCoeff() >= 0.0);
        CHECK(b.maxCoeff() <= 1.0);
    }

    CHECK(truncated_normal_mean(0.5, 0.1) == doctest::Approx(0.5).epsilon(1e-12));

    // Monte-Carlo check of the analytic mean, asymmetric case included.
    for (double loc : {0.5, 0.1, 0.95}) {
        const int n = 200000;
        double sum = 0.0;
        double sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double b = draw_instantaneous_rewards(vec({loc}), 0.1, rng)(0);
            sum += b;
            sq += b * b;
        }
        const double mean = sum / n;
        const double se = std::sqrt((sq / n - mean * mean) / n);
        CHECK(std::abs(mean - truncated_normal_mean(loc, 0.1)) <= 3.0 * se);
    }
}

TEST_CASE("sem_output") {
    const auto w0 = AdjacencyMatrix::zero(2);
    auto fb = sem_output(w0, vec({0.4, 0.6}), arms_of(2, {0, 1}));
    CHECK(fb.z.isApprox(vec({0.4, 0.6})));
    CHECK(fb.y.isApprox(vec({0.4, 0.6})));
    CHECK_FALSE(fb.payoff.has_value());

    Matrix w = zeros(2);
    w(1, 0) = 0.5;
    fb = sem_output(AdjacencyMatrix(w, true), vec({1.0, 1.0}), arms_of(2, {0, 1}));
    CHECK(fb.y(0) == doctest::Approx(1.0));
    CHECK(fb.y(1) == doctest::Approx(1.5));

    Matrix w3 = zeros(3);
    w3(2, 0) = 0.5;
    w3(2, 1) = 0.5;
    fb = sem_output(AdjacencyMatrix(w3, true), vec({0.4, 0.6, 0.2}), arms_of(3, {0, 1, 2}));
    const Vector direct = (Matrix::Identity(3, 3) - w3).fullPivLu().solve(fb.z);
    CHECK((fb.y - direct).norm() < 1e-14);
    CHECK(fb.y.isApprox(vec({0.4, 0.6, 0.7})));

    // z vanishes off the played set.
    fb = sem_output(AdjacencyMatrix(w3, true), vec({0.4, 0.6, 0.2}), arms_of(3, {1}));
    CHECK(fb.z(0) == 0.0);
    CHECK(fb.z(2) == 0.0);
}

TEST_CASE("payoff") {
    CHECK(payoff(vec({1, 1}), vec({1, 1.5})) == doctest::Approx(2.5));
    CHECK(payoff(vec({0, 0}), vec({3, 4})) == 0.0);
    CHECK(payoff(vec({0, 1}), vec({9, 0.3})) == doctest::Approx(0.3));
}

TEST_CASE("sem_output then payoff matches the explicit-inverse form") {
    Rng rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = 2 + static_cast<int>(rng.below(9));
        const auto w = random_dag(k, 0.3, 0.1, 0.9, rng);
        Vector b(k);
        Vector c(k);
        for (int i = 0; i < k; ++i) {
            b(i) = rng.uniform();
            c(i) = rng.bernoulli(0.7) ? 1.0 : 0.0;
        }
        DecisionVector x(k);
        for (int i = 0; i < k; ++i) x.set(i, rng.bernoulli(0.5));
        const double via_solve = payoff(c, sem_output(w, b, x).y);
        const Vector z = b.cwiseProduct(x.as_vector());
        const double via_inverse = c.dot(oracle::propagation(w.weights()) * z);
        CHECK(std::abs(via_solve - via_inverse) <= 1e-10 * k);
    }
}

TEST_CASE("expected_payoff") {
    const Vector mu = vec({0.9, 0.1, 0.5});
    CHECK(expected_payoff(vec({1, 1, 1}), AdjacencyMatrix::zero(3), mu, arms_of(3, {0, 2})) == doctest::Approx(1.4));
    CHECK(expected_payoff(vec({1, 1, 1}), AdjacencyMatrix::zero(3), mu, DecisionVector(3)) == 0.0);

    Matrix w = zeros(2);
    w(1, 0) = 1.0;
    const AdjacencyMatrix a(w, true);
    CHECK(expected_payoff(vec({0, 1}), a, vec({0.9, 0.1}), arms_of(2, {0})) == doctest::Approx(0.9));
    CHECK(oracle::expected_payoff(vec({0, 1}), w, vec({0.9, 0.1}), {0}) == doctest::Approx(0.9));
}

TEST_CASE("optimal_action") {
    const Vector mu = vec({0.9, 0.1, 0.5});
    auto best = optimal_action(vec({1, 1, 1}), AdjacencyMatrix::zero(3), mu, 2);
    CHECK(best.x == arms_of(3, {0, 2}));
    CHECK(best.value == doctest::Approx(1.4));
    CHECK(best.value == doctest::Approx(oracle::brute_force_best(vec({1, 1, 1}), zeros(3), mu, 2)));

    Matrix w = zeros(2);
    w(1, 0) = 1.0;
    best = optimal_action(vec({0, 1}), AdjacencyMatrix(w, true), vec({0.9, 0.1}), 1);
    CHECK(best.x == arms_of(2, {0}));
    CHECK(best.value == doctest::Approx(0.9));
    CHECK(best.value == doctest::Approx(oracle::brute_force_best(vec({0, 1}), w, vec({0.9, 0.1}), 1)));

    best = optimal_action(vec({1, 1, 1}), AdjacencyMatrix::zero(3), Vector::Zero(3), 2);
    CHECK(best.x == DecisionVector(3));
    CHECK(best.value == 0.0);

    // Ties go to the lowest index.
    best = optimal_action(vec({1, 1, 1}), AdjacencyMatrix::zero(3), vec({0.5, 0.5, 0.5}), 2);
    CHECK(best.x == arms_of(3, {0, 1}));
}

TEST_CASE("optimal_action agrees with enumeration") {
    Rng rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        const int k = 1 + static_cast<int>(rng.below(10));
        const int m = 1 + static_cast<int>(rng.below(3));
        const auto w = random_dag(k, rng.uniform(0.0, 0.5), 0.1, 0.9, rng);
        Vector mu(k);
        Vector c(k);
        for (int i = 0; i < k; ++i) {
            mu(i) = rng.uniform();
            c(i) = rng.bernoulli(0.6) ? 1.0 : 0.0;
        }
        const auto best = optimal_action(c, w, mu, m);
        CHECK(best.x.feasible(m));
        CHECK(std::abs(best.value - oracle::brute_force_best(c, w.weights(), mu, m)) <= 1e-10);
    }
}

TEST_CASE("payoff_gap") {
    const Vector weights = vec({0.9, 0.1, 0.5, 0.0});
    const auto best = top_m_positive(weights, 2);
    CHECK(payoff_gap(weights, best, best) == 0.0);
    CHECK(payoff_gap(weights, best, arms_of(4, {0, 1})) == doctest::Approx(0.4));
    CHECK(payoff_gap(weights, best, arms_of(4, {3})) == doctest::Approx(1.4));
    CHECK(payoff_gap(weights, best, DecisionVector(4)) == doctest::Approx(1.4));
}

TEST_CASE("top_m_positive with forced arms") {
    const Vector weights = vec({0.9, 0.0, 0.5, 0.7});
    CHECK(top_m_positive(weights, 2) == arms_of(4, {0, 3}));
    CHECK(top_m_positive(weights, 2, {false, true, false, false}) == arms_of(4, {0, 1}));
    CHECK(top_m_positive(weights, 4) == arms_of(4, {0, 2, 3}));
}
