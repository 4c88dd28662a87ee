#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "coconut/error.hpp"

namespace coconut {

/// Engine-wide configuration shared by summarization, index construction and
/// querying. Immutable once validated; cheap to copy.
struct EngineConfig {
    std::size_t series_len = 256;     // points per series (n)
    std::size_t segment_count = 16;   // PAA/SAX segments (w), must divide n
    unsigned bits_per_segment = 8;    // bits per SAX code (b), 1..8
    std::size_t leaf_capacity = 2000; // records per leaf
    double fill_factor = 1.0;         // target leaf occupancy at bulk load, (0.5, 1.0]
    std::uint64_t memory_budget = 256ull << 20; // sort buffer bytes
    std::uint64_t block_size = 4096;  // I/O accounting block

    std::size_t points_per_segment() const { return series_len / segment_count; }

    /// Bytes of one interleaved key, padded to whole bytes.
    std::size_t key_bytes() const { return (segment_count * bits_per_segment + 7) / 8; }

    /// Bytes of one raw series on disk (32-bit floats).
    std::size_t series_bytes() const { return 4 * series_len; }

    std::size_t cardinality() const { return std::size_t{1} << bits_per_segment; }

    void validate() const {
        if (series_len < 2)
            throw ConfigError("series_len must be at least 2, got " + std::to_string(series_len));
        if (segment_count == 0)
            throw ConfigError("segment_count must be positive");
        if (series_len % segment_count != 0)
            throw ConfigError("series_len (" + std::to_string(series_len) +
                              ") must be divisible by segment_count (" +
                              std::to_string(segment_count) + ")");
        if (bits_per_segment < 1 || bits_per_segment > 8)
            throw ConfigError("bits_per_segment must be in [1, 8], got " +
                              std::to_string(bits_per_segment));
        if (segment_count * bits_per_segment > 512)
            throw ConfigError("segment_count * bits_per_segment must not exceed 512");
        if (leaf_capacity < 2)
            throw ConfigError("leaf_capacity must be at least 2");
        if (!(fill_factor > 0.5) || !(fill_factor <= 1.0))
            throw ConfigError("fill_factor must lie in (0.5, 1.0]");
        if (memory_budget == 0)
            throw ConfigError("memory_budget must be positive");
        if (block_size == 0)
            throw ConfigError("block_size must be positive");
    }
};

} // namespace coconut
