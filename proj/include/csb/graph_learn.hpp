#pragma once

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "csb/sem.hpp"

namespace csb {

enum class Regularizer { l1, dtv };

struct LearnerConfig {
    double lambda1 = 1e-6;
    double lambda2 = 0.0;  // pull towards the previous segment's graph
    Regularizer regularizer = Regularizer::l1;
    bool allow_cycles = false;  // forced on for the DTV regularizer
    int max_iters = 5000;
    // Stop once the proximal-gradient step ||W+ - W|| is below this fraction
    // of max(1, ||W+||).
    double step_tolerance = 1e-10;
    double epsilon_residual = 1e-6;
    bool record_history = false;
};

/// Columns of overall (Y) and exogenous (Z) rewards since the last graph
/// reset, plus the sufficient statistics the solver needs. Statistics are
/// kept up to date on every append so solves cost O(K^3) per iteration
/// whatever the number of columns.
class FeedbackBuffer {
  public:
    explicit FeedbackBuffer(int k = 0);

    void append(const Vector& y, const Vector& z);
    void clear();

    int dimension() const { return k_; }
    int size() const { return n_; }
    bool empty() const { return n_ == 0; }

    Eigen::Map<const Matrix> Y() const { return {y_.data(), k_, n_}; }
    Eigen::Map<const Matrix> Z() const { return {z_.data(), k_, n_}; }

    const Matrix& gram() const { return gram_; }              // Y Y^T
    const Matrix& cross() const { return cross_; }            // (Y - Z) Y^T
    const Vector& residual_energy() const { return energy_; } // row norms^2 of Y - Z
    const Matrix& directed_variation() const { return dtv_; } // D(i, j) = sum_h (Y(i,h) - Y(j,h))^+

  private:
    int k_ = 0;
    int n_ = 0;
    std::vector<double> y_;
    std::vector<double> z_;
    Matrix gram_;
    Matrix cross_;
    Vector energy_;
    Matrix dtv_;
};

struct GraphEstimate {
    Matrix W_hat;
    double objective_value = 0.0;
    int iterations = 0;
    std::vector<double> objective_history;  // filled when record_history is set

    /// Usable SEM matrix: flagged as a DAG when the estimate is acyclic,
    /// otherwise checked for spectral radius < 1 (NumericError if not).
    AdjacencyMatrix adjacency() const;

    nlohmann::json to_json() const;
};

/// K x K identity: GLDG round t' plays arm t' alone.
Matrix build_init_matrix(int k, int m);

/// Column `index` of the initialization design as a decision vector.
DecisionVector init_column(int k, int index);

/// sum_{i,j} W(i,j) sum_h max(Y(i,h) - Y(j,h), 0)
double dtv_penalty(const Matrix& w, const Matrix& y);

/// Full objective of the graph learning problem at W.
double learning_objective(const FeedbackBuffer& buffer, const LearnerConfig& config, const Matrix& w,
                          const Matrix* anchor = nullptr);

/// Minimizes ||Y - W Y - Z||_F^2 + lambda1 * penalty(W) [+ lambda2 ||W - anchor||_1]
/// over zero-diagonal W with monotone accelerated proximal gradient and
/// backtracking. The returned matrix has negatives clamped to zero.
/// `anchor` is the previous segment's graph, used only when lambda2 > 0.
/// Throws std::invalid_argument for an empty buffer.
GraphEstimate estimate_adjacency(const FeedbackBuffer& buffer, const LearnerConfig& config,
                                 const GraphEstimate* warm_start = nullptr, const Matrix* anchor = nullptr);

/// Same problem solved as K independent row problems.
GraphEstimate estimate_adjacency_rowwise(const FeedbackBuffer& buffer, const LearnerConfig& config,
                                         const GraphEstimate* warm_start = nullptr, const Matrix* anchor = nullptr);

/// ||y - W y - z||_2^2
double sem_residual(const Matrix& w_hat, const Vector& y, const Vector& z);

/// True (graph changed) iff the SEM residual of (y, z) under w_hat exceeds epsilon.
bool residual_test(const Matrix& w_hat, const Vector& y, const Vector& z, double epsilon);

/// lambda1 from `grid` minimizing the reconstruction error on `validation`
/// after fitting on `train`; ties go to the smaller value.
double grid_search_lambda(const FeedbackBuffer& train, const FeedbackBuffer& validation, std::vector<double> grid,
                          LearnerConfig config = {});

}  // namespace csb
