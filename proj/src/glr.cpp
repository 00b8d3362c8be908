#include "csb/glr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace csb {

namespace {

// x ln x with the 0 ln 0 = 0 convention.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// Count-weighted Bernoulli entropy: n * H(sum / n), written in terms of the
// sum so that no division happens in the hot loop: n ln n - s ln s - (n-s) ln (n-s).
inline double weighted_entropy(double sum, double count) {
    return xlogx(count) - xlogx(sum) - xlogx(count - sum);
}

}  // namespace

double kl_bernoulli(double x, double y) {
    if (!(y > 0.0 && y < 1.0)) throw std::domain_error("kl_bernoulli: y must lie strictly inside (0, 1)");
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("kl_bernoulli: x must lie in [0, 1]");
    const double a = x > 0.0 ? x * std::log(x / y) : 0.0;
    const double b = x < 1.0 ? (1.0 - x) * std::log((1.0 - x) / (1.0 - y)) : 0.0;
    return std::max(a + b, 0.0);
}

double glr_threshold(std::size_t n, double delta, ThresholdMode mode) {
    const auto nn = static_cast<double>(n);
    const double base = std::log(3.0 * nn * std::sqrt(nn) / delta);
    if (mode == ThresholdMode::practical) return base;
    const double x = base / 2.0;
    const double tx = x + 4.0 * std::log(1.0 + x + std::sqrt(2.0 * x));
    return 2.0 * tx + 6.0 * std::log(1.0 + std::log(nn));
}

double glr_statistic(std::span<const double> samples, std::size_t stride) {
    const std::size_t n = samples.size();
    if (n < 2) return 0.0;
    double total = 0.0;
    for (double s : samples) total += s;
    const double mean = total / static_cast<double>(n);
    if (mean <= 0.0 || mean >= 1.0) return 0.0;
    double best = 0.0;
    double head = 0.0;
    std::size_t consumed = 0;
    for (std::size_t a = stride; a < n; a += stride) {
        while (consumed < a) head += samples[consumed++];
        const double tail = total - head;
        const double a_d = static_cast<double>(a);
        const double b_d = static_cast<double>(n - a);
        const double m1 = std::clamp(head / a_d, 0.0, 1.0);
        const double m2 = std::clamp(tail / b_d, 0.0, 1.0);
        best = std::max(best, a_d * kl_bernoulli(m1, mean) + b_d * kl_bernoulli(m2, mean));
    }
    return best;
}

GlrDetector::GlrDetector(double delta, ThresholdMode mode, std::size_t stride)
    : delta_(delta), mode_(mode), stride_(stride) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("GlrDetector: delta must lie in (0, 1)");
    if (stride < 1) throw std::invalid_argument("GlrDetector: stride must be >= 1");
}

bool GlrDetector::push(double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("GlrDetector: sample " + std::to_string(s) + " outside [0, 1]");
    samples_.push_back(s);
    lowest_ = std::min(lowest_, s);
    highest_ = std::max(highest_, s);
    const auto n_d = static_cast<double>(samples_.size());
    count_entropy_.push_back(xlogx(n_d));
    const double sum = prefix_.back() + s;
    prefix_.push_back(sum);
    const double head = std::clamp(sum, 0.0, n_d);
    head_entropy_.push_back(count_entropy_.back() - xlogx(head) - xlogx(n_d - head));
    return test();
}

bool GlrDetector::test() const {
    const std::size_t n = samples_.size();
    if (n < 2) return false;
    const double threshold = glr_threshold(n, delta_, mode_);
    return scan(threshold) >= threshold;
}

double GlrDetector::statistic() const { return scan(std::numeric_limits<double>::infinity()); }

double GlrDetector::scan(double stop_at) const {
    const std::size_t n = samples_.size();
    if (n < 2) return 0.0;
    const double total = prefix_[n];
    const auto n_d = static_cast<double>(n);
    if (total <= 0.0 || total >= n_d || lowest_ == highest_) return 0.0;
    // Split statistic = n H(mean) - a H(head mean) - (n - a) H(tail mean).
    const double whole = weighted_entropy(total, n_d);
    double best = 0.0;
    for (std::size_t a = stride_; a < n; a += stride_) {
        const double count = static_cast<double>(n - a);
        const double tail = std::clamp(total - prefix_[a], 0.0, count);
        const double value = whole - head_entropy_[a] - (count_entropy_[n - a] - xlogx(tail) - xlogx(count - tail));
        if (value > best) {
            best = value;
            if (best >= stop_at) break;
        }
    }
    return best;
}

void GlrDetector::reset() {
    samples_.clear();
    prefix_.assign(1, 0.0);
    head_entropy_.assign(1, 0.0);
    count_entropy_.assign(1, 0.0);
    lowest_ = std::numeric_limits<double>::infinity();
    highest_ = -std::numeric_limits<double>::infinity();
}

}  // namespace csb
