#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace csb {

// SplitMix64 finalizer. Used to derive independent sub-stream seeds from a
// (parent seed, stream index) pair so that replication r of an experiment
// always sees the same stream regardless of how many replications run.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
    return mix64(mix64(parent) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

/// Fixed sub-stream indices below a replication seed.
enum class Stream : std::uint64_t { environment = 0, policy = 1, generator = 2 };

/// Seeded 64-bit generator with portable uniform helpers. The standard
/// library distributions are implementation-defined, so every draw that
/// feeds a trace goes through the helpers here instead.
class Rng {
  public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    Rng split(Stream stream) const { return Rng(derive_seed(seed_of_state(), static_cast<std::uint64_t>(stream))); }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on the open interval (0, 1).
    double uniform_open() {
        double u;
        do {
            u = uniform();
        } while (u == 0.0);
        return u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), rejection sampling to avoid modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // k distinct elements of `pool`, in draw order (partial Fisher-Yates).
    template <class T>
    std::vector<T> sample(std::vector<T> pool, std::size_t k) {
        if (k > pool.size()) k = pool.size();
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = i + static_cast<std::size_t>(below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
        }
    }

  private:
    std::uint64_t seed_of_state() const {
        auto copy = engine_;
        return copy();
    }

    std::mt19937_64 engine_;
};

}  // namespace csb
