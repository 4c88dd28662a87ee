#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "coconut/breakpoints.hpp"
#include "coconut/config.hpp"
#include "coconut/raw_dataset.hpp"
#include "coconut/series.hpp"

namespace coconut {

/// splitmix64: tiny, seedable, and fully pinned down so generated datasets
/// are reproducible across platforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97f4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in (0, 1): the top 53 bits, shifted off zero.
    double next_u01() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal draw by inverting the normal CDF at a uniform point.
    double next_gaussian() { return inverse_normal_cdf(next_u01()); }

private:
    std::uint64_t state_;
};

/// Z-normalized Gaussian random walk: x_0 = g_0, x_i = x_{i-1} + g_i.
inline DataSeries random_walk_series(SplitMix64& rng, std::size_t length) {
    std::vector<double> walk(length);
    double x = 0;
    for (std::size_t i = 0; i < length; ++i) {
        x += rng.next_gaussian();
        walk[i] = x;
    }
    return z_normalize(walk);
}

/// Write `count` random-walk series of `length` points to a raw file.
/// One RNG stream, consumed sequentially, drives the whole file.
inline void generate_random_walks(const std::filesystem::path& path, std::uint64_t count,
                                  std::size_t length, std::uint64_t seed,
                                  IoCounters* counters = nullptr) {
    SplitMix64 rng(seed);
    RawDatasetWriter writer(path, length, counters);
    for (std::uint64_t i = 0; i < count; ++i) writer.append(random_walk_series(rng, length));
}

} // namespace coconut
