#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace csb {

/// Binary relative entropy kl(x, y) in nats, with 0 log 0 = 0.
/// Throws std::domain_error unless x in [0, 1] and y in (0, 1).
double kl_bernoulli(double x, double y);

enum class ThresholdMode { practical, theoretical };

/// Detection threshold for n samples at confidence delta.
///   practical:   ln(3 n sqrt(n) / delta)
///   theoretical: 2 T(ln(3 n sqrt(n) / delta) / 2) + 6 ln(1 + ln n), using the
///                usual closed-form approximation T(x) = x + 4 ln(1 + x + sqrt(2x)).
double glr_threshold(std::size_t n, double delta, ThresholdMode mode = ThresholdMode::practical);

/// Bernoulli GLR statistic of a bounded sample stream, computed directly
/// from segment means: max over splits a in [1, n-1] (every `stride`-th) of
/// a kl(mean[0, a), mean) + (n - a) kl(mean[a, n), mean). Zero when n < 2 or
/// the overall mean is 0 or 1.
double glr_statistic(std::span<const double> samples, std::size_t stride = 1);

/// Per-arm GLR change-point detector over samples in [0, 1].
///
/// Each push rescans every split point, so a segment of length n costs
/// O(n^2) overall; `stride` trades recall for speed by testing every
/// stride-th split only. The prefix half of the statistic never changes once
/// a sample is in, so it is cached per split and only the suffix is recomputed.
class GlrDetector {
  public:
    explicit GlrDetector(double delta, ThresholdMode mode = ThresholdMode::practical, std::size_t stride = 1);

    /// Appends a sample and tests for a change. Throws std::invalid_argument
    /// when s lies outside [0, 1].
    bool push(double s);

    /// True iff the statistic over the held samples reaches the threshold.
    bool test() const;

    double statistic() const;

    void reset();

    std::size_t size() const { return samples_.size(); }
    double delta() const { return delta_; }
    ThresholdMode mode() const { return mode_; }
    std::size_t stride() const { return stride_; }
    std::span<const double> samples() const { return samples_; }
    double prefix_sum(std::size_t count) const { return prefix_[count]; }

  private:
    // Max of the split statistic, returning early once it reaches `stop_at`.
    double scan(double stop_at) const;

    double delta_;
    ThresholdMode mode_;
    std::size_t stride_;
    std::vector<double> samples_;
    std::vector<double> prefix_{0.0};      // prefix_[i] = sum of the first i samples
    std::vector<double> head_entropy_{0.0}; // i * H(mean of the first i samples)
    std::vector<double> count_entropy_{0.0}; // i ln i
    double lowest_ = std::numeric_limits<double>::infinity();
    double highest_ = -std::numeric_limits<double>::infinity();
};

}  // namespace csb
