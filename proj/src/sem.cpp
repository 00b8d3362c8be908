#include "csb/sem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

namespace csb {

namespace {

void require_square_zero_diagonal(const Matrix& w) {
    if (w.rows() != w.cols()) {
        throw std::invalid_argument("adjacency matrix must be square");
    }
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        if (w(i, i) != 0.0) {
            throw std::invalid_argument("adjacency matrix has a nonzero diagonal entry at " + std::to_string(i));
        }
    }
}

}  // namespace

std::optional<std::vector<int>> topological_order(const Matrix& w) {
    const int k = static_cast<int>(w.rows());
    std::vector<int> indegree(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            if (w(i, j) != 0.0) ++indegree[static_cast<std::size_t>(i)];
        }
    }
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(k));
    std::vector<int> ready;
    for (int i = k - 1; i >= 0; --i) {
        if (indegree[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
    }
    while (!ready.empty()) {
        const int j = ready.back();
        ready.pop_back();
        order.push_back(j);
        for (int i = k - 1; i >= 0; --i) {
            if (w(i, j) != 0.0 && --indegree[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
        }
    }
    if (static_cast<int>(order.size()) != k) return std::nullopt;
    return order;
}

bool validate_dag(const Matrix& w) {
    require_square_zero_diagonal(w);
    return topological_order(w).has_value();
}

bool is_sem_invertible(const Matrix& w) {
    // I - W is a Z-matrix; it is a nonsingular M-matrix iff every pivot of
    // an unpivoted elimination is positive.
    Matrix a = Matrix::Identity(w.rows(), w.cols()) - w;
    const Eigen::Index n = a.rows();
    for (Eigen::Index p = 0; p < n; ++p) {
        if (!(a(p, p) > 0.0)) return false;
        for (Eigen::Index i = p + 1; i < n; ++i) {
            const double f = a(i, p) / a(p, p);
            if (f != 0.0) a.row(i).tail(n - p) -= f * a.row(p).tail(n - p);
        }
    }
    return true;
}

double spectral_radius(const Matrix& w) {
    if (w.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> solver(w, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

AdjacencyMatrix::AdjacencyMatrix(Matrix weights, bool dag_constrained)
    : w_(std::move(weights)), dag_(dag_constrained) {
    require_square_zero_diagonal(w_);
    if ((w_.array() < 0.0).any() || !w_.allFinite()) {
        throw std::invalid_argument("adjacency weights must be finite and nonnegative");
    }
    if (auto order = topological_order(w_)) {
        order_ = std::move(*order);
        return;
    }
    if (dag_) {
        throw std::invalid_argument("dag-constrained adjacency matrix contains a cycle");
    }
    if (!is_sem_invertible(w_)) {
        throw NumericError("I - W is singular or has spectral radius >= 1");
    }
    lu_.compute(Matrix::Identity(w_.rows(), w_.cols()) - w_);
}

Vector AdjacencyMatrix::solve(const Vector& z) const {
    if (z.size() != w_.rows()) throw std::invalid_argument("solve: dimension mismatch");
    if (!acyclic()) return lu_.solve(z);
    // Parents precede children in order_, so each y_k only reads finished entries.
    Vector y(z.size());
    for (int k : order_) {
        double acc = z(k);
        for (Eigen::Index j = 0; j < w_.cols(); ++j) {
            if (w_(k, j) != 0.0) acc += w_(k, j) * y(j);
        }
        y(k) = acc;
    }
    return y;
}

Vector AdjacencyMatrix::solve_transpose(const Vector& c) const {
    if (c.size() != w_.rows()) throw std::invalid_argument("solve_transpose: dimension mismatch");
    if (!acyclic()) return lu_.transpose().solve(c);
    // v = c + W^T v: v_j depends on children of j, so walk the order backwards.
    Vector v(c.size());
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        const int j = *it;
        double acc = c(j);
        for (Eigen::Index i = 0; i < w_.rows(); ++i) {
            if (w_(i, j) != 0.0) acc += w_(i, j) * v(i);
        }
        v(j) = acc;
    }
    return v;
}

Matrix AdjacencyMatrix::propagation() const {
    return (Matrix::Identity(w_.rows(), w_.cols()) - w_).inverse();
}

DecisionVector DecisionVector::from_arms(int k, std::span<const int> arms) {
    DecisionVector x(k);
    for (int a : arms) {
        if (a < 0 || a >= k) throw std::invalid_argument("arm index out of range");
        x.set(a);
    }
    return x;
}

int DecisionVector::count() const {
    return static_cast<int>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<int> DecisionVector::arms() const {
    std::vector<int> out;
    for (int k = 0; k < size(); ++k) {
        if ((*this)[k]) out.push_back(k);
    }
    return out;
}

Vector DecisionVector::as_vector() const {
    Vector v(size());
    for (int k = 0; k < size(); ++k) v(k) = (*this)[k] ? 1.0 : 0.0;
    return v;
}

double truncated_normal_mean(double loc, double scale) {
    if (scale <= 0.0) return loc;
    const boost::math::normal_distribution<double> std_normal;
    const double a = (0.0 - loc) / scale;
    const double b = (1.0 - loc) / scale;
    // Z computed from whichever tail keeps precision.
    const double mass = a > 0.0 ? cdf(complement(std_normal, a)) - cdf(complement(std_normal, b))
                                : cdf(std_normal, b) - cdf(std_normal, a);
    const double mean = loc + scale * (pdf(std_normal, a) - pdf(std_normal, b)) / mass;
    return std::clamp(mean, 0.0, 1.0);
}

Vector truncated_normal_means(const Vector& loc, double scale) {
    Vector out(loc.size());
    for (Eigen::Index k = 0; k < loc.size(); ++k) out(k) = truncated_normal_mean(loc(k), scale);
    return out;
}

Vector draw_instantaneous_rewards(const Vector& loc, double scale, Rng& rng) {
    Vector b(loc.size());
    if (scale <= 0.0) {
        for (Eigen::Index k = 0; k < loc.size(); ++k) b(k) = loc(k);
        return b;
    }
    const boost::math::normal_distribution<double> std_normal;
    for (Eigen::Index k = 0; k < loc.size(); ++k) {
        const double a = (0.0 - loc(k)) / scale;
        const double hi = (1.0 - loc(k)) / scale;
        const double lower_a = cdf(std_normal, a);
        const double lower_b = cdf(std_normal, hi);
        const double upper_a = cdf(complement(std_normal, a));
        const double upper_b = cdf(complement(std_normal, hi));
        const double u = rng.uniform_open();
        const double p = lower_a + u * (lower_b - lower_a);
        double s;
        if (p < 0.5) {
            s = quantile(std_normal, std::max(p, std::numeric_limits<double>::min()));
        } else {
            const double q = upper_a - u * (upper_a - upper_b);
            s = quantile(complement(std_normal, std::max(q, std::numeric_limits<double>::min())));
        }
        b(k) = std::clamp(loc(k) + scale * s, 0.0, 1.0);
    }
    return b;
}

RoundFeedback sem_output(const AdjacencyMatrix& w, const Vector& b, const DecisionVector& x) {
    if (b.size() != w.size() || x.size() != w.size()) {
        throw std::invalid_argument("sem_output: dimension mismatch");
    }
    RoundFeedback fb;
    fb.z = b.cwiseProduct(x.as_vector());
    fb.y = w.solve(fb.z);
    return fb;
}

double payoff(const Vector& c, const Vector& y) {
    if (c.size() != y.size()) throw std::invalid_argument("payoff: dimension mismatch");
    return c.dot(y);
}

Vector payoff_weights(const Vector& c, const AdjacencyMatrix& w, const Vector& mu) {
    if (c.size() != w.size() || mu.size() != w.size()) {
        throw std::invalid_argument("payoff_weights: dimension mismatch");
    }
    return w.solve_transpose(c).cwiseProduct(mu);
}

double expected_payoff(const Vector& c, const AdjacencyMatrix& w, const Vector& mu, const DecisionVector& x) {
    return payoff_weights(c, w, mu).dot(x.as_vector());
}

DecisionVector top_m_positive(const Vector& weights, int m, const std::vector<bool>& forced) {
    const int k = static_cast<int>(weights.size());
    DecisionVector x(k);
    int chosen = 0;
    for (int a = 0; a < k && chosen < m && !forced.empty(); ++a) {
        if (forced[static_cast<std::size_t>(a)]) {
            x.set(a);
            ++chosen;
        }
    }
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) { return weights(i) > weights(j); });
    for (int a : idx) {
        if (chosen >= m) break;
        if (x[a] || !(weights(a) > 0.0)) continue;
        x.set(a);
        ++chosen;
    }
    return x;
}

OptimalAction optimal_action(const Vector& c, const AdjacencyMatrix& w, const Vector& mu, int m) {
    const Vector weights = payoff_weights(c, w, mu);
    OptimalAction best{top_m_positive(weights, m), 0.0};
    best.value = weights.dot(best.x.as_vector());
    return best;
}

double payoff_gap(const Vector& weights, const DecisionVector& best, const DecisionVector& played) {
    // Pair the arms only in `best` against those only in `played`, both in
    // descending weight order: every pair difference is >= 0.
    std::vector<double> gain;
    std::vector<double> loss;
    for (int k = 0; k < best.size(); ++k) {
        if (best[k] && !played[k]) gain.push_back(weights(k));
        if (played[k] && !best[k]) loss.push_back(weights(k));
    }
    std::sort(gain.begin(), gain.end(), std::greater<>());
    std::sort(loss.begin(), loss.end(), std::greater<>());
    const std::size_t n = std::max(gain.size(), loss.size());
    double gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = i < gain.size() ? gain[i] : 0.0;
        const double l = i < loss.size() ? loss[i] : 0.0;
        gap += std::max(g - l, 0.0);
    }
    return gap;
}

}  // namespace csb
