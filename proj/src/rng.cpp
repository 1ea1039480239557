#include "mtfer/rng.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "mtfer/errors.hpp"

namespace mtfer {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void Rng::reseed(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : s_) word = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    if (!(lo < hi)) {
        throw RangeError("uniform range requires lo < hi, got [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + ")");
    }
    const double v = lo + (hi - lo) * uniform();
    // lo + (hi-lo)*u can round up to hi when u is close to 1.
    return v < hi ? v : std::nextafter(hi, lo);
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw RangeError("below() requires a positive bound");
    // Rejection sampling on the largest multiple of bound.
    const std::uint64_t limit = -bound % bound;  // (2^64 - bound) mod bound
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= limit) return r % bound;
    }
}

}  // namespace mtfer
