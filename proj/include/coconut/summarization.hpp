#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coconut/breakpoints.hpp"
#include "coconut/config.hpp"
#include "coconut/error.hpp"
#include "coconut/series.hpp"

namespace coconut {

/// Per-segment region codes of one series (the SAX word).
struct SaxWord {
    std::vector<std::uint8_t> codes; // exactly w codes, each < 2^b

    bool operator==(const SaxWord&) const = default;
    // Plain lexicographic word order (segment by segment), for comparison
    // against the interleaved key order.
    auto operator<=>(const SaxWord&) const = default;
};

/// Piecewise aggregate approximation: the mean of each of the w segments.
inline std::vector<double> paa(std::span<const double> values, std::size_t segment_count) {
    if (segment_count == 0 || values.size() % segment_count != 0)
        throw ConfigError("paa: series length " + std::to_string(values.size()) +
                          " is not divisible by segment count " +
                          std::to_string(segment_count));
    const std::size_t seg = values.size() / segment_count;
    std::vector<double> out(segment_count);
    for (std::size_t j = 0; j < segment_count; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < seg; ++i) s += values[j * seg + i];
        out[j] = s / static_cast<double>(seg);
    }
    return out;
}

inline std::vector<double> paa(const DataSeries& s, std::size_t segment_count) {
    return paa(std::span<const double>(s.values), segment_count);
}

/// Region code of one PAA value. A value exactly on a cut belongs to the
/// higher region.
inline std::uint8_t sax_code(double value, const Breakpoints& bp) {
    auto it = std::upper_bound(bp.cuts.begin(), bp.cuts.end(), value);
    return static_cast<std::uint8_t>(it - bp.cuts.begin());
}

inline SaxWord sax(std::span<const double> values, std::size_t segment_count,
                   const Breakpoints& bp) {
    SaxWord word;
    auto means = paa(values, segment_count);
    word.codes.resize(segment_count);
    for (std::size_t j = 0; j < segment_count; ++j) word.codes[j] = sax_code(means[j], bp);
    return word;
}

inline SaxWord sax(const DataSeries& s, const EngineConfig& cfg, const Breakpoints& bp) {
    if (s.size() != cfg.series_len)
        throw ConfigError("sax: series length " + std::to_string(s.size()) +
                          " does not match configured " + std::to_string(cfg.series_len));
    return sax(std::span<const double>(s.values), cfg.segment_count, bp);
}

// ---------------------------------------------------------------------------
// Sortable summarization: the bit-interleaved key.
//
// Bit position (i*w + j) of the key, counted from the most significant bit of
// the byte array, holds bit i of segment j's code (bit 0 being the most
// significant of the b code bits). Trailing pad bits up to the next whole byte
// are zero. Byte-wise lexicographic comparison of two keys thereby equals
// comparison of the interleaved bit strings, i.e. z-order of the words.
// ---------------------------------------------------------------------------

/// Fixed-width interleaved key. Comparison is byte-lexicographic.
struct InvSaxKey {
    std::vector<std::uint8_t> bytes;

    bool operator==(const InvSaxKey&) const = default;
    auto operator<=>(const InvSaxKey&) const = default;
};

inline void invert_sum_into(std::span<const std::uint8_t> codes, unsigned bits_per_segment,
                            std::uint8_t* out, std::size_t out_len) {
    const std::size_t w = codes.size();
    std::fill(out, out + out_len, 0);
    std::size_t pos = 0;
    for (unsigned i = 0; i < bits_per_segment; ++i) {
        for (std::size_t j = 0; j < w; ++j, ++pos) {
            const unsigned bit = (codes[j] >> (bits_per_segment - 1 - i)) & 1u;
            if (bit) out[pos >> 3] |= static_cast<std::uint8_t>(0x80u >> (pos & 7));
        }
    }
}

/// Interleave a word's code bits, most significant bits of all segments first.
inline InvSaxKey invert_sum(const SaxWord& word, unsigned bits_per_segment) {
    for (std::uint8_t c : word.codes)
        if (bits_per_segment < 8 && (c >> bits_per_segment) != 0)
            throw ConfigError("invert_sum: code " + std::to_string(c) + " does not fit " +
                              std::to_string(bits_per_segment) + " bits");
    InvSaxKey key;
    key.bytes.resize((word.codes.size() * bits_per_segment + 7) / 8);
    invert_sum_into(word.codes, bits_per_segment, key.bytes.data(), key.bytes.size());
    return key;
}

inline SaxWord restore_sum_from(const std::uint8_t* bytes, std::size_t byte_len,
                                std::size_t segment_count, unsigned bits_per_segment) {
    const std::size_t total_bits = segment_count * bits_per_segment;
    if (byte_len != (total_bits + 7) / 8)
        throw ConfigError("restore_sum: key of " + std::to_string(byte_len) +
                          " bytes does not match w*b = " + std::to_string(total_bits));
    SaxWord word;
    word.codes.assign(segment_count, 0);
    std::size_t pos = 0;
    for (unsigned i = 0; i < bits_per_segment; ++i) {
        for (std::size_t j = 0; j < segment_count; ++j, ++pos) {
            const unsigned bit = (bytes[pos >> 3] >> (7 - (pos & 7))) & 1u;
            word.codes[j] = static_cast<std::uint8_t>((word.codes[j] << 1) | bit);
        }
    }
    // codes were assembled msb-first, so they are already complete; verify pad
    for (; pos < byte_len * 8; ++pos) {
        if ((bytes[pos >> 3] >> (7 - (pos & 7))) & 1u)
            throw IntegrityError("restore_sum: nonzero pad bit at position " +
                                 std::to_string(pos));
    }
    return word;
}

/// Exact inverse of invert_sum. Nonzero pad bits indicate corruption.
inline SaxWord restore_sum(const InvSaxKey& key, std::size_t segment_count,
                           unsigned bits_per_segment) {
    return restore_sum_from(key.bytes.data(), key.bytes.size(), segment_count,
                            bits_per_segment);
}

// ---------------------------------------------------------------------------
// Lower-bound distance between a query and every series summarized by a word.
// ---------------------------------------------------------------------------

/// Gap between a value and the region of a code: zero when the value lies
/// inside the region, else the distance to the nearest region boundary.
inline double cell_gap(double value, std::uint8_t code, const Breakpoints& bp) {
    const std::size_t regions = bp.region_count();
    if (code >= regions) throw ConfigError("cell_gap: code out of range");
    if (code > 0 && value < bp.cuts[code - 1]) return bp.cuts[code - 1] - value;
    if (std::size_t(code) + 1 < regions && value > bp.cuts[code]) return value - bp.cuts[code];
    return 0.0;
}

/// MINDIST between a query's PAA vector and a SAX word:
///   sqrt(n/w) * sqrt(sum_j gap_j^2)
/// Guaranteed not to exceed the Euclidean distance from the query to any
/// series whose word this is.
inline double mindist_paa(std::span<const double> query_paa, const SaxWord& word,
                          const Breakpoints& bp, std::size_t series_len) {
    if (query_paa.size() != word.codes.size())
        throw ConfigError("mindist: segment count mismatch");
    double s = 0;
    for (std::size_t j = 0; j < query_paa.size(); ++j) {
        double g = cell_gap(query_paa[j], word.codes[j], bp);
        s += g * g;
    }
    return std::sqrt(double(series_len) / double(query_paa.size())) * std::sqrt(s);
}

inline double mindist(const DataSeries& query, const SaxWord& word, const EngineConfig& cfg,
                      const Breakpoints& bp) {
    if (query.size() != cfg.series_len || word.codes.size() != cfg.segment_count)
        throw ConfigError("mindist: configuration mismatch");
    auto q = paa(query, cfg.segment_count);
    return mindist_paa(q, word, bp, cfg.series_len);
}

/// Binds a configuration to its breakpoints so call sites can go straight
/// from a series to its word or key.
class Summarizer {
public:
    explicit Summarizer(const EngineConfig& cfg)
        : cfg_(cfg), bp_(compute_breakpoints(cfg.bits_per_segment)) {
        cfg_.validate();
    }

    const EngineConfig& config() const { return cfg_; }
    const Breakpoints& breakpoints() const { return bp_; }

    SaxWord word(std::span<const double> values) const {
        return sax(values, cfg_.segment_count, bp_);
    }

    InvSaxKey key(std::span<const double> values) const {
        return invert_sum(word(values), cfg_.bits_per_segment);
    }

    void key_into(std::span<const double> values, std::uint8_t* out) const {
        auto w = word(values);
        invert_sum_into(w.codes, cfg_.bits_per_segment, out, cfg_.key_bytes());
    }

private:
    EngineConfig cfg_;
    Breakpoints bp_;
};

} // namespace coconut
