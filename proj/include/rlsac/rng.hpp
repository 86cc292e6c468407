#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace rlsac {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic, portable random source (xoshiro256**). All draws are
/// implemented here rather than with <random> distributions so the byte
/// streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : s_) {
            x = splitmix64(x);
            word = x;
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), unbiased.
    int uniform_int(int n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return static_cast<int>(x % bound);
    }

    /// Standard normal via Box-Muller (one value per pair of uniforms).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Independent child stream, reproducible from (seed, stream) alone.
    Rng fork(std::uint64_t stream) const {
        return Rng(splitmix64(s_[0] ^ splitmix64(stream ^ 0xa5a5a5a5a5a5a5a5ULL)));
    }

    /// Distinct sorted indices drawn uniformly from [0, n).
    std::vector<int> sample_without_replacement(int n, int m);

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

inline std::vector<int> Rng::sample_without_replacement(int n, int m) {
    std::vector<int> picked;
    picked.reserve(m);
    while (static_cast<int>(picked.size()) < m) {
        const int candidate = uniform_int(n);
        bool seen = false;
        for (int p : picked) {
            if (p == candidate) {
                seen = true;
                break;
            }
        }
        if (!seen) picked.push_back(candidate);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

}  // namespace rlsac
