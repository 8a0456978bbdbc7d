// Deterministic random number streams.
//
// The whole pipeline must reproduce byte-for-byte from a single master
// seed, independent of thread count and platform, so we avoid the
// standard <random> distributions (their algorithms are
// implementation-defined) and generate everything from a fixed
// xoshiro256++ core. Streams are derived from (master_seed, stream_id),
// which lets each synthetic drop own an independent stream regardless
// of generation order.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace shockcal {

struct SplitMix64 {
    std::uint64_t state;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id) {
        SplitMix64 sm{master_seed ^ (0x9E3779B97F4A7C15ULL * (stream_id + 0x632BE59BD9B4E019ULL))};
        for (auto& word : state_) word = sm.next();
        bool all_zero = true;
        for (auto word : state_) all_zero &= (word == 0);
        if (all_zero) state_[0] = 1;  // xoshiro requires a nonzero state
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    // Standard normal via Box-Muller; consumes exactly two uniforms per call.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t next_below(std::uint64_t n) { return n <= 1 ? 0 : next_u64() % n; }

    template <class T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
};

}  // namespace shockcal
