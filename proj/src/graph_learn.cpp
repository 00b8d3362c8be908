#include "csb/graph_learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <stdexcept>

namespace csb {

FeedbackBuffer::FeedbackBuffer(int k) : k_(k) { clear(); }

void FeedbackBuffer::append(const Vector& y, const Vector& z) {
    if (y.size() != k_ || z.size() != k_) throw std::invalid_argument("FeedbackBuffer: column has the wrong dimension");
    y_.insert(y_.end(), y.data(), y.data() + k_);
    z_.insert(z_.end(), z.data(), z.data() + k_);
    ++n_;
    const Vector r = y - z;
    gram_.noalias() += y * y.transpose();
    cross_.noalias() += r * y.transpose();
    energy_ += r.cwiseAbs2();
    for (int i = 0; i < k_; ++i) {
        for (int j = 0; j < k_; ++j) dtv_(i, j) += std::max(y(i) - y(j), 0.0);
    }
}

void FeedbackBuffer::clear() {
    n_ = 0;
    y_.clear();
    z_.clear();
    gram_ = Matrix::Zero(k_, k_);
    cross_ = Matrix::Zero(k_, k_);
    energy_ = Vector::Zero(k_);
    dtv_ = Matrix::Zero(k_, k_);
}

AdjacencyMatrix GraphEstimate::adjacency() const {
    const bool acyclic = topological_order(W_hat).has_value();
    return AdjacencyMatrix(W_hat, acyclic);
}

nlohmann::json GraphEstimate::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < W_hat.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < W_hat.cols(); ++j) row.push_back(W_hat(i, j));
        rows.push_back(std::move(row));
    }
    return {{"W_hat", rows}, {"objective", objective_value}, {"iterations", iterations}};
}

Matrix build_init_matrix(int k, int m) {
    if (k < 1 || m < 1) throw std::invalid_argument("build_init_matrix: K and m must be >= 1");
    return Matrix::Identity(k, k);
}

DecisionVector init_column(int k, int index) {
    DecisionVector x(k);
    x.set(index);
    return x;
}

double dtv_penalty(const Matrix& w, const Matrix& y) {
    if (w.rows() != y.rows() || w.cols() != y.rows()) throw std::invalid_argument("dtv_penalty: shape mismatch");
    double total = 0.0;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            if (w(i, j) == 0.0) continue;
            double variation = 0.0;
            for (Eigen::Index h = 0; h < y.cols(); ++h) variation += std::max(y(i, h) - y(j, h), 0.0);
            total += w(i, j) * variation;
        }
    }
    return total;
}

namespace {

// One block of rows of the learning problem, expressed in scaled
// coordinates U = W S with S = diag(scale) (Jacobi preconditioning of the
// Gram matrix). The penalty stays separable under the column scaling.
struct Block {
    std::vector<int> rows;
    Matrix gram;    // S G S
    Matrix cross;   // C_rows S
    double energy = 0.0;
    Matrix l1;      // per-entry weight on |U(i,j)|
    Matrix pull;    // per-entry weight on |U(i,j) - target(i,j)|
    Matrix target;  // anchor in scaled coordinates
    Vector scale;
};

double smooth_value(const Block& b, const Matrix& u) {
    return b.energy - 2.0 * u.cwiseProduct(b.cross).sum() + (u * b.gram).cwiseProduct(u).sum();
}

double penalty_value(const Block& b, const Matrix& u) {
    double total = (b.l1.array() * u.array().abs()).sum();
    if (b.pull.size() > 0) total += (b.pull.array() * (u - b.target).array().abs()).sum();
    return total;
}

// argmin_w 0.5 (w - v)^2 + a |w| + c |w - p|
double prox_entry(double v, double a, double c, double p) {
    if (c == 0.0) {
        if (v > a) return v - a;
        if (v < -a) return v + a;
        return 0.0;
    }
    auto phi = [&](double w) { return 0.5 * (w - v) * (w - v) + a * std::abs(w) + c * std::abs(w - p); };
    double best = 0.0;
    double best_value = phi(0.0);
    auto consider = [&](double w) {
        const double value = phi(w);
        if (value < best_value) {
            best_value = value;
            best = w;
        }
    };
    consider(p);
    for (double s1 : {-1.0, 1.0}) {
        for (double s2 : {-1.0, 1.0}) {
            const double w = v - a * s1 - c * s2;
            if (w * s1 >= 0.0 && (w - p) * s2 >= 0.0) consider(w);
        }
    }
    return best;
}

Matrix prox(const Block& b, const Matrix& v, double step) {
    Matrix out(v.rows(), v.cols());
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        const int row = b.rows[static_cast<std::size_t>(r)];
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            if (j == row) {
                out(r, j) = 0.0;
                continue;
            }
            const double c = b.pull.size() > 0 ? step * b.pull(r, j) : 0.0;
            const double p = b.pull.size() > 0 ? b.target(r, j) : 0.0;
            out(r, j) = prox_entry(v(r, j), step * b.l1(r, j), c, p);
        }
    }
    return out;
}

Block make_block(const FeedbackBuffer& buffer, const LearnerConfig& config, std::vector<int> rows, const Matrix* anchor) {
    const int k = buffer.dimension();
    Block b;
    b.rows = std::move(rows);
    b.scale = Vector::Ones(k);
    for (int j = 0; j < k; ++j) {
        const double g = buffer.gram()(j, j);
        if (g > 0.0) b.scale(j) = 1.0 / std::sqrt(g);
    }
    b.gram = b.scale.asDiagonal() * buffer.gram() * b.scale.asDiagonal();
    const auto r = static_cast<Eigen::Index>(b.rows.size());
    b.cross.resize(r, k);
    b.l1.resize(r, k);
    const bool dtv = config.regularizer == Regularizer::dtv;
    const bool pulled = config.lambda2 > 0.0 && anchor != nullptr;
    if (pulled) {
        b.pull.resize(r, k);
        b.target.resize(r, k);
    }
    for (Eigen::Index i = 0; i < r; ++i) {
        const int row = b.rows[static_cast<std::size_t>(i)];
        b.energy += buffer.residual_energy()(row);
        for (int j = 0; j < k; ++j) {
            b.cross(i, j) = buffer.cross()(row, j) * b.scale(j);
            const double weight = dtv ? config.lambda1 * buffer.directed_variation()(row, j) : config.lambda1;
            b.l1(i, j) = weight * b.scale(j);
            if (pulled) {
                b.pull(i, j) = config.lambda2 * b.scale(j);
                b.target(i, j) = (*anchor)(row, j) / b.scale(j);
            }
        }
    }
    return b;
}

// KKT interval of the penalty of entry j of row r at value x:
// [lo, hi] = a d|x| + c d|x - p|.
std::pair<double, double> subgradient(const Block& b, Eigen::Index r, Eigen::Index j, double x) {
    double lo = 0.0;
    double hi = 0.0;
    auto add = [&](double weight, double d) {
        if (weight == 0.0) return;
        lo += d > 0.0 ? weight : -weight;
        hi += d < 0.0 ? -weight : weight;
    };
    add(b.l1(r, j), x);
    if (b.pull.size() > 0) add(b.pull(r, j), x - b.target(r, j));
    return {lo, hi};
}

// Roundoff scale of the gradient 2 (G w - c).
double kkt_tolerance(const Block& b, Eigen::Index r, const Vector& w) {
    const double size = b.gram.cwiseAbs().maxCoeff() * w.cwiseAbs().sum() + b.cross.row(r).cwiseAbs().maxCoeff();
    return 1e-12 * std::max(1.0, size);
}

// Exact refinement of one row by a feature-sign style active set method.
// Every entry is either pinned at a kink of its penalty (0, or the anchor
// when pulled) or free inside one smooth piece, where the objective is a
// quadratic. Each step solves that quadratic, stops at the first kink it
// would cross, or frees the pinned entry with the largest KKT violation;
// the objective never increases. A row is returned only once it satisfies
// the KKT conditions, which for this convex problem certifies a global
// minimizer.
std::optional<Vector> polish_row(const Block& b, Eigen::Index r, Vector w) {
    const int row = b.rows[static_cast<std::size_t>(r)];
    const Eigen::Index k = w.size();
    const bool pulled = b.pull.size() > 0;
    auto kinks = [&](Eigen::Index j) {
        std::vector<double> out;
        if (b.l1(r, j) > 0.0) out.push_back(0.0);
        if (pulled && b.pull(r, j) > 0.0) out.push_back(b.target(r, j));
        return out;
    };

    // Free entries carry a point strictly inside their piece, which fixes the
    // slope of the penalty there.
    std::vector<bool> free(static_cast<std::size_t>(k), false);
    Vector side(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        if (j == row) {
            w(j) = 0.0;
            continue;
        }
        const auto ks = kinks(j);
        bool pinned = false;
        for (double kink : ks) {
            if (std::abs(w(j) - kink) <= 1e-12 * std::max(1.0, std::abs(kink))) {
                w(j) = kink;
                pinned = true;
            }
        }
        free[static_cast<std::size_t>(j)] = !pinned;
        side(j) = w(j);
    }

    auto slope = [&](Eigen::Index j) {
        const auto [lo, hi] = subgradient(b, r, j, side(j));
        return 0.5 * (lo + hi);  // lo == hi strictly inside a piece
    };

    const int max_steps = 20 * static_cast<int>(k) + 50;
    for (int step = 0; step < max_steps; ++step) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (free[static_cast<std::size_t>(j)]) idx.push_back(j);
        }
        Vector target = w;
        if (!idx.empty()) {
            const auto n = static_cast<Eigen::Index>(idx.size());
            Vector pinned_w = w;
            for (Eigen::Index j : idx) pinned_w(j) = 0.0;
            const Vector pinned_part = b.gram * pinned_w;
            Matrix g(n, n);
            Vector rhs(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto fi = idx[static_cast<std::size_t>(i)];
                rhs(i) = b.cross(r, fi) - 0.5 * slope(fi) - pinned_part(fi);
                for (Eigen::Index j = 0; j < n; ++j) g(i, j) = b.gram(fi, idx[static_cast<std::size_t>(j)]);
            }
            const Eigen::LDLT<Matrix> ldlt(g);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
            const Vector sol = ldlt.solve(rhs);
            if (!sol.allFinite() || (g * sol - rhs).norm() > 1e-8 * std::max(1.0, rhs.norm())) return std::nullopt;
            for (Eigen::Index i = 0; i < n; ++i) target(idx[static_cast<std::size_t>(i)]) = sol(i);
        }

        // First kink crossed on the way from w to target.
        double t_cross = 1.0;
        Eigen::Index hit = -1;
        double hit_kink = 0.0;
        for (Eigen::Index j : idx) {
            const double from = w(j);
            const double to = target(j);
            for (double kink : kinks(j)) {
                const bool inside_above = side(j) > kink;
                const bool leaves = inside_above ? to < kink : to > kink;
                if (!leaves) continue;
                const double t = (kink - from) / (to - from);
                if (t < t_cross) {
                    t_cross = std::max(t, 0.0);
                    hit = j;
                    hit_kink = kink;
                }
            }
        }
        if (hit >= 0) {
            w += t_cross * (target - w);
            w(hit) = hit_kink;
            free[static_cast<std::size_t>(hit)] = false;
            for (Eigen::Index j : idx) {
                if (j != hit) side(j) = w(j) == side(j) ? side(j) : 0.5 * (w(j) + side(j));
            }
            continue;
        }
        w = target;
        for (Eigen::Index j : idx) side(j) = w(j);

        // Optimal on the current pattern; check the pinned entries.
        const Vector grad = 2.0 * (b.gram * w - b.cross.row(r).transpose());
        const double tol = kkt_tolerance(b, r, w);
        Eigen::Index worst = -1;
        double worst_violation = tol;
        double direction = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (j == row || free[static_cast<std::size_t>(j)]) continue;
            const auto [lo, hi] = subgradient(b, r, j, w(j));
            const double need = -grad(j);
            if (need > hi + worst_violation) {
                worst_violation = need - hi;
                worst = j;
                direction = 1.0;
            } else if (need < lo - worst_violation) {
                worst_violation = lo - need;
                worst = j;
                direction = -1.0;
            }
        }
        if (worst < 0) {
            // Free entries sit inside their pieces, so stationarity there is
            // the linear solve above; confirm everything with the full check.
            for (Eigen::Index j = 0; j < k; ++j) {
                if (j == row) continue;
                const auto [lo, hi] = subgradient(b, r, j, w(j));
                if (-grad(j) < lo - tol || -grad(j) > hi + tol) return std::nullopt;
            }
            return w;
        }
        free[static_cast<std::size_t>(worst)] = true;
        // A point just past the kink in the descent direction: the next kink
        // along, or one unit beyond, bounds the piece.
        double next = w(worst) + direction;
        for (double kink : kinks(worst)) {
            if ((kink - w(worst)) * direction > 0.0 && std::abs(kink - w(worst)) < std::abs(next - w(worst))) next = kink;
        }
        side(worst) = 0.5 * (w(worst) + next);
    }
    return std::nullopt;
}

void polish(const Block& b, Matrix& u) {
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
        if (auto w = polish_row(b, r, u.row(r).transpose())) u.row(r) = w->transpose();
    }
}

struct BlockResult {
    Matrix w;
    double objective = 0.0;
    int iterations = 0;
    std::vector<double> history;
};

BlockResult solve_block(const Block& b, const LearnerConfig& config, Matrix u) {
    for (Eigen::Index r = 0; r < u.rows(); ++r) u(r, b.rows[static_cast<std::size_t>(r)]) = 0.0;

    double lipschitz = 0.0;
    if (b.gram.size() > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(b.gram, Eigen::EigenvaluesOnly);
        lipschitz = 2.0 * eig.eigenvalues().maxCoeff();
    }
    lipschitz = std::max(lipschitz, 1e-12);

    auto objective = [&](const Matrix& m) { return smooth_value(b, m) + penalty_value(b, m); };

    BlockResult result;
    Matrix x = u;
    double fx = objective(x);
    Matrix y = x;
    double t = 1.0;
    if (config.record_history) result.history.push_back(fx);

    int it = 0;
    for (; it < config.max_iters; ++it) {
        const Matrix grad = 2.0 * (y * b.gram - b.cross);
        const double fy_smooth = smooth_value(b, y);
        Matrix z;
        double fz_smooth;
        for (;;) {
            z = prox(b, y - grad / lipschitz, 1.0 / lipschitz);
            fz_smooth = smooth_value(b, z);
            const Matrix d = z - y;
            const double model = fy_smooth + grad.cwiseProduct(d).sum() + 0.5 * lipschitz * d.squaredNorm();
            if (fz_smooth <= model + 1e-12 * std::max(1.0, std::abs(model)) || lipschitz > 1e300) break;
            lipschitz *= 2.0;
        }
        const double fz = fz_smooth + penalty_value(b, z);
        const double step = (z - y).norm();

        // Monotone acceleration: keep the better of z and the previous iterate.
        const Matrix x_prev = x;
        if (fz <= fx) {
            x = z;
            fx = fz;
        }
        if (config.record_history) result.history.push_back(fx);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev);
        t = t_next;

        if (step <= config.step_tolerance * std::max(1.0, z.norm())) {
            ++it;
            break;
        }
    }
    polish(b, x);
    result.iterations = it;
    result.objective = objective(x);
    result.w = x * b.scale.asDiagonal();
    return result;
}

void check_inputs(const FeedbackBuffer& buffer, const LearnerConfig& config) {
    if (buffer.empty()) throw std::invalid_argument("estimate_adjacency: empty feedback buffer");
    if (config.lambda1 < 0.0 || config.lambda2 < 0.0) throw std::invalid_argument("estimate_adjacency: negative regularization");
}

Matrix initial_point(const FeedbackBuffer& buffer, const GraphEstimate* warm_start) {
    const int k = buffer.dimension();
    if (warm_start && warm_start->W_hat.rows() == k && warm_start->W_hat.cols() == k) return warm_start->W_hat;
    return Matrix::Zero(k, k);
}

GraphEstimate finish(Matrix w, double objective, int iterations, std::vector<double> history) {
    GraphEstimate est;
    w.diagonal().setZero();
    est.W_hat = w.cwiseMax(0.0);
    est.objective_value = objective;
    est.iterations = iterations;
    est.objective_history = std::move(history);
    return est;
}

}  // namespace

double learning_objective(const FeedbackBuffer& buffer, const LearnerConfig& config, const Matrix& w, const Matrix* anchor) {
    const Matrix r = buffer.Y() - w * buffer.Y() - buffer.Z();
    double value = r.squaredNorm();
    if (config.regularizer == Regularizer::dtv) {
        value += config.lambda1 * (w.cwiseAbs().cwiseProduct(buffer.directed_variation())).sum();
    } else {
        value += config.lambda1 * w.cwiseAbs().sum();
    }
    if (anchor && config.lambda2 > 0.0) value += config.lambda2 * (w - *anchor).cwiseAbs().sum();
    return value;
}

GraphEstimate estimate_adjacency(const FeedbackBuffer& buffer, const LearnerConfig& config, const GraphEstimate* warm_start,
                                 const Matrix* anchor) {
    check_inputs(buffer, config);
    const int k = buffer.dimension();
    std::vector<int> rows(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) rows[static_cast<std::size_t>(i)] = i;
    const Block block = make_block(buffer, config, rows, anchor);
    const Matrix start = initial_point(buffer, warm_start) * block.scale.cwiseInverse().asDiagonal();
    BlockResult res = solve_block(block, config, start);
    return finish(std::move(res.w), res.objective, res.iterations, std::move(res.history));
}

GraphEstimate estimate_adjacency_rowwise(const FeedbackBuffer& buffer, const LearnerConfig& config,
                                         const GraphEstimate* warm_start, const Matrix* anchor) {
    check_inputs(buffer, config);
    const int k = buffer.dimension();
    const Matrix start = initial_point(buffer, warm_start);
    Matrix w = Matrix::Zero(k, k);
    double objective = 0.0;
    int iterations = 0;
    for (int i = 0; i < k; ++i) {
        const Block block = make_block(buffer, config, {i}, anchor);
        const Matrix row_start = start.row(i) * block.scale.cwiseInverse().asDiagonal();
        BlockResult res = solve_block(block, config, row_start);
        w.row(i) = res.w.row(0);
        objective += res.objective;
        iterations = std::max(iterations, res.iterations);
    }
    return finish(std::move(w), objective, iterations, {});
}

double sem_residual(const Matrix& w_hat, const Vector& y, const Vector& z) {
    if (w_hat.rows() != y.size() || y.size() != z.size()) throw std::invalid_argument("sem_residual: dimension mismatch");
    return (y - w_hat * y - z).squaredNorm();
}

bool residual_test(const Matrix& w_hat, const Vector& y, const Vector& z, double epsilon) {
    return sem_residual(w_hat, y, z) > epsilon;
}

double grid_search_lambda(const FeedbackBuffer& train, const FeedbackBuffer& validation, std::vector<double> grid,
                          LearnerConfig config) {
    if (grid.empty()) throw std::invalid_argument("grid_search_lambda: empty grid");
    std::sort(grid.begin(), grid.end());
    double best_lambda = grid.front();
    double best_error = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        config.lambda1 = lambda;
        const GraphEstimate fit = estimate_adjacency(train, config);
        const double error = (validation.Y() - fit.W_hat * validation.Y() - validation.Z()).squaredNorm();
        if (error < best_error) {
            best_error = error;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

}  // namespace csb
