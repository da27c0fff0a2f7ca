#ifndef KESTEN_RANDOM_HPP
#define KESTEN_RANDOM_HPP

#include "kesten/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace kesten {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stream for block `index` of computation `tag` under user seed `seed`.
/// Results depend only on (seed, tag, index), never on scheduling.
inline Engine make_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    const std::uint64_t s = mix64(mix64(mix64(seed) ^ tag) ^ index);
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(tag)};
    return Engine(seq);
}

inline double uniform01(Engine& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Inverse-CDF draw from a cumulative weight table (last entry = total mass).
inline int draw_index(std::span<const double> cumulative, Engine& rng) {
    const double u = uniform01(rng) * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                     static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
}

/// Uniform direction on the unit sphere of R^d.
inline Vec random_direction(int d, Engine& rng) {
    std::normal_distribution<double> n01;
    Vec x(d);
    do {
        for (int i = 0; i < d; ++i)
            x(i) = n01(rng);
    } while (x.norm() < 1e-12);
    return x / x.norm();
}

inline std::vector<double> cumulative_of(std::span<const double> w) {
    std::vector<double> c(w.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        acc += w[i];
        c[i] = acc;
    }
    return c;
}

} // namespace kesten

#endif // KESTEN_RANDOM_HPP
