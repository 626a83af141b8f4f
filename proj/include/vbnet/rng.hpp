#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <vector>

namespace vbnet {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

// Deterministic, seedable generator: xoshiro256++ state expanded from the
// seed via splitmix64, standard normals by the Marsaglia polar method (an
// exact transform; a spare variate is cached between calls). Identical seeds
// give bit-identical streams within this implementation; cross-implementation
// bit compatibility is not promised.
class RngState {
public:
    explicit RngState(std::uint64_t seed) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            word = detail::splitmix64(sm);
        }
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random mantissa bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on [a, b).
    double uniform(double a, double b) {
        return a + (b - a) * uniform();
    }

    // Uniform integer in [0, n). Multiply-shift mapping; the bias of at most
    // n / 2^64 is irrelevant at the sizes used here.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline std::vector<double> sample_std_normal(RngState& rng, std::size_t n) {
    std::vector<double> out(n);
    for (auto& x : out) x = rng.normal();
    return out;
}

// Seed-derivation rule for independent streams:
//   child_seed = splitmix64(splitmix64(parent_seed) ^ splitmix64(stream_index)).
// Parallel work must use distinct stream indices; RngState itself is
// single-owner.
inline std::uint64_t derive_seed(std::uint64_t parent_seed, std::uint64_t stream_index) {
    std::uint64_t a = parent_seed;
    std::uint64_t b = stream_index;
    std::uint64_t mixed = detail::splitmix64(a) ^ detail::splitmix64(b);
    return detail::splitmix64(mixed);
}

} // namespace vbnet
