#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <utility>

namespace mtfer {

/// Seedable 64-bit generator: xoshiro256** whose state is expanded from the
/// seed with SplitMix64. The stream is fully specified by the algorithm, so a
/// given seed yields the same bits on every platform and standard library.
class Rng {
public:
    using State = std::array<std::uint64_t, 4>;

    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) built from the top 53 bits.
    double uniform();

    /// Uniform double in [lo, hi). Throws RangeError unless lo < hi.
    double uniform(double lo, double hi);

    /// Uniform integer in [0, bound) without modulo bias. bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Fisher-Yates shuffle driven by this generator.
    template <class RandomIt>
    void shuffle(RandomIt first, RandomIt last) {
        const auto n = static_cast<std::uint64_t>(std::distance(first, last));
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = below(i);
            using std::swap;
            swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
        }
    }

    /// Derive an independent generator (e.g. one per epoch) from this one.
    Rng fork() { return Rng(next_u64()); }

    const State& state() const noexcept { return s_; }

    friend bool operator==(const Rng& a, const Rng& b) noexcept { return a.s_ == b.s_; }

private:
    State s_{};
};

/// One SplitMix64 step; exposed for seeding helpers and tests.
std::uint64_t splitmix64(std::uint64_t& x);

}  // namespace mtfer
