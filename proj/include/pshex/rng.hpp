#ifndef PSHEX_RNG_HPP
#define PSHEX_RNG_HPP

#include <cmath>
#include <cstdint>

namespace pshex {

/// Counter-based pseudo-random stream (splitmix64 finalizer over an indexed
/// state). Any slot can be addressed in O(1), so sampling shards that
/// partition the counter space reproduce the exact same draws in any order.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream_id)
        : base_(mix(mix(seed) ^ mix(stream_id ^ 0x5bf0'3635'd1a2'74c1ULL))) {}

    /// Uniform in (0,1), value at counter slot `ctr`.
    double uniform(std::uint64_t ctr) const {
        const std::uint64_t bits = mix(base_ + ctr * 0x9e3779b97f4a7c15ULL);
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Pair of independent standard normals from slots (2k, 2k+1) via Box-Muller.
    void normal_pair(std::uint64_t k, double& n0, double& n1) const {
        const double u1 = uniform(2 * k);
        const double u2 = uniform(2 * k + 1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        n0 = r * std::cos(2.0 * M_PI * u2);
        n1 = r * std::sin(2.0 * M_PI * u2);
    }

    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    std::uint64_t base_;
};

/// Fixed stream ids so distinct consumers never overlap counters.
namespace streams {
inline constexpr std::uint64_t integrate      = 1;
inline constexpr std::uint64_t integrate_alt  = 2;
inline constexpr std::uint64_t projection     = 3;
inline constexpr std::uint64_t sublevel       = 4;
inline constexpr std::uint64_t mollify_kernel = 5;
inline constexpr std::uint64_t directions     = 6;
inline constexpr std::uint64_t envelope_start = 7;
inline constexpr std::uint64_t cert_points    = 8;
inline constexpr std::uint64_t normalization  = 9;
inline constexpr std::uint64_t scalar_misc    = 10;
} // namespace streams

} // namespace pshex

#endif
