#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csb/rng.hpp"

namespace csb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a linear system of the SEM cannot be solved, e.g. a cyclic
/// estimate whose spectral radius reaches 1.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// True iff the nonzero pattern of `w` admits a topological order.
/// `w(k, j) != 0` is read as an edge j -> k (arm j feeds arm k).
/// Throws std::invalid_argument on a non-square matrix or nonzero diagonal.
bool validate_dag(const Matrix& w);

/// Topological order of the nonzero pattern, or nullopt if it has a cycle.
std::optional<std::vector<int>> topological_order(const Matrix& w);

/// True iff I - W is a nonsingular M-matrix, i.e. spectral radius of the
/// nonnegative matrix W is below one. Checked by unpivoted elimination.
bool is_sem_invertible(const Matrix& w);

/// Spectral radius via a dense eigen-decomposition (diagnostics and tests).
double spectral_radius(const Matrix& w);

/// K x K nonnegative causal weight matrix with zero diagonal.
class AdjacencyMatrix {
  public:
    AdjacencyMatrix() = default;

    /// Validates the invariants. A dag-constrained matrix must be acyclic; an
    /// unconstrained one must keep I - W invertible with nonnegative inverse.
    AdjacencyMatrix(Matrix weights, bool dag_constrained);

    static AdjacencyMatrix zero(int k) { return AdjacencyMatrix(Matrix::Zero(k, k), true); }

    int size() const { return static_cast<int>(w_.rows()); }
    const Matrix& weights() const { return w_; }
    bool dag_constrained() const { return dag_; }
    bool acyclic() const { return !order_.empty() || size() == 0; }
    double operator()(int i, int j) const { return w_(i, j); }

    /// Solves (I - W) y = z.
    Vector solve(const Vector& z) const;

    /// Solves (I - W)^T v = c, so that v^T = c^T (I - W)^{-1}.
    Vector solve_transpose(const Vector& c) const;

    /// (I - W)^{-1} as a dense matrix. Only meant for oracles and tests.
    Matrix propagation() const;

  private:
    Matrix w_;
    bool dag_ = true;
    std::vector<int> order_;
    Eigen::PartialPivLU<Matrix> lu_;
};

/// Binary K-vector of played arms.
class DecisionVector {
  public:
    DecisionVector() = default;
    explicit DecisionVector(int k) : bits_(static_cast<std::size_t>(k), 0) {}

    static DecisionVector from_arms(int k, std::span<const int> arms);

    int size() const { return static_cast<int>(bits_.size()); }
    int count() const;
    bool operator[](int k) const { return bits_[static_cast<std::size_t>(k)] != 0; }
    void set(int k, bool on = true) { bits_[static_cast<std::size_t>(k)] = on ? 1 : 0; }
    bool feasible(int m) const { return count() <= m; }

    std::vector<int> arms() const;
    Vector as_vector() const;

    friend bool operator==(const DecisionVector&, const DecisionVector&) = default;

  private:
    std::vector<std::uint8_t> bits_;
};

struct RoundFeedback {
    Vector z;  // instantaneous (semi-bandit) rewards, zero off the played set
    Vector y;  // overall rewards after causal propagation
    std::optional<double> payoff;
};

/// Mean of N(loc, scale^2) truncated to [0, 1].
double truncated_normal_mean(double loc, double scale);

Vector truncated_normal_means(const Vector& loc, double scale);

/// One draw of per-arm rewards: independent truncated normals on [0, 1].
/// scale == 0 returns `loc` exactly.
Vector draw_instantaneous_rewards(const Vector& loc, double scale, Rng& rng);

/// z = diag(b) x, y = (I - W)^{-1} z. Payoff is left unset.
RoundFeedback sem_output(const AdjacencyMatrix& w, const Vector& b, const DecisionVector& x);

/// c^T y.
double payoff(const Vector& c, const Vector& y);

/// Per-arm payoff contributions M = diag(mu) (I - W)^{-T} c, so the expected
/// payoff of x is M^T x.
Vector payoff_weights(const Vector& c, const AdjacencyMatrix& w, const Vector& mu);

double expected_payoff(const Vector& c, const AdjacencyMatrix& w, const Vector& mu, const DecisionVector& x);

/// Picks the (at most) m largest strictly positive entries of `weights`,
/// ties going to the lower arm index. Arms flagged in `forced` are taken
/// first, lowest index first, regardless of their weight.
DecisionVector top_m_positive(const Vector& weights, int m, const std::vector<bool>& forced = {});

struct OptimalAction {
    DecisionVector x;
    double value = 0.0;
};

OptimalAction optimal_action(const Vector& c, const AdjacencyMatrix& w, const Vector& mu, int m);

/// Exact, never-negative gap between the expected payoff of `best` (a top-m
/// selection of `weights`) and that of `played`.
double payoff_gap(const Vector& weights, const DecisionVector& best, const DecisionVector& played);

}  // namespace csb
