#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include "coconut/config.hpp"
#include "coconut/error.hpp"
#include "coconut/index_reader.hpp"
#include "coconut/raw_dataset.hpp"
#include "coconut/series.hpp"
#include "coconut/summarization.hpp"

namespace coconut {

struct SearchCounters {
    std::uint64_t leaves_visited = 0;
    std::uint64_t series_fetched = 0;
    std::uint64_t summaries_scanned = 0;
    std::uint64_t records_pruned = 0;
    double wall_ms = 0.0;
};

struct QueryResult {
    std::uint64_t offset = 0; // raw-file byte offset of the answer
    double distance = 0.0;
    SearchCounters counters;
};

namespace detail {

class Stopwatch {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

/// (distance^2, offset) pair ordered the way every search breaks ties:
/// smaller distance wins, equal distances go to the lower offset.
struct Best {
    double dist_sq = std::numeric_limits<double>::infinity();
    std::uint64_t offset = 0;
    bool valid = false;

    bool offer(double d_sq, std::uint64_t off) {
        if (!valid || d_sq < dist_sq || (d_sq == dist_sq && off < offset)) {
            dist_sq = d_sq;
            offset = off;
            valid = true;
            return true;
        }
        return false;
    }
};

} // namespace detail

/// Linear-scan nearest neighbor over the raw file; the correctness oracle
/// for everything else. Ties resolve to the lowest offset.
inline QueryResult brute_force_nn(RawDataset& data, const DataSeries& query) {
    detail::Stopwatch clock;
    if (data.count() == 0) throw ConfigError("raw file holds no series");
    detail::Best best;
    QueryResult r;
    for (std::uint64_t i = 0; i < data.count(); ++i) {
        DataSeries s = data.read_series(i);
        double d_sq = squared_distance_abandon(query.values, s.values, best.dist_sq);
        best.offer(d_sq, i * data.series_bytes());
        ++r.counters.series_fetched;
    }
    r.offset = best.offset;
    r.distance = std::sqrt(best.dist_sq);
    r.counters.wall_ms = clock.ms();
    return r;
}

/// Approximate search: descend to the leaf where the query's record would
/// insert, then take the best true distance within `radius` leaves either
/// side. Needs an attached raw file unless the index is materialized.
inline QueryResult approx_search(IndexReader& idx, const DataSeries& query,
                                 std::uint64_t radius = 1) {
    detail::Stopwatch clock;
    const EngineConfig cfg = idx.header().config();
    if (query.size() != cfg.series_len)
        throw ConfigError("query length " + std::to_string(query.size()) +
                          " does not match index series length " +
                          std::to_string(cfg.series_len));
    Summarizer summarizer(cfg);
    const std::uint64_t center = idx.locate_leaf(summarizer.key(query.values));
    const std::uint64_t lo = center >= radius ? center - radius : 0;
    const std::uint64_t hi = std::min(idx.leaf_count() - 1, center + radius);

    detail::Best best;
    QueryResult r;
    for (std::uint64_t leaf = lo; leaf <= hi; ++leaf) {
        IndexReader::LeafView view = idx.read_leaf(leaf);
        ++r.counters.leaves_visited;
        for (std::uint64_t i = 0; i < view.count; ++i) {
            std::vector<double> s =
                view.materialized ? view.series(i) : idx.fetch_series(view.offset(i));
            ++r.counters.series_fetched;
            double d_sq = squared_distance_abandon(query.values, s, best.dist_sq);
            best.offer(d_sq, view.offset(i));
        }
    }
    r.offset = best.offset;
    r.distance = std::sqrt(best.dist_sq);
    r.counters.wall_ms = clock.ms();
    return r;
}

struct ExactOptions {
    std::uint64_t seed_radius = 1; // approximate pass that seeds the bound
    unsigned workers = 1;          // threads for the bound-computation phase
};

/// Exact nearest neighbor: an approximate result seeds the best-so-far
/// distance, lower bounds over the in-memory summary array gate which
/// records are fetched, and every surviving record is checked in rank
/// order. The answer never depends on `workers`.
///
/// `pruned_ranks`, when given, receives every rank skipped by the bound —
/// the hook for pruning-soundness audits.
inline QueryResult exact_search(IndexReader& idx, const DataSeries& query,
                                const ExactOptions& opt = {},
                                std::vector<std::uint64_t>* pruned_ranks = nullptr) {
    detail::Stopwatch clock;
    QueryResult seed = approx_search(idx, query, opt.seed_radius);

    const EngineConfig cfg = idx.header().config();
    const Breakpoints bp = compute_breakpoints(cfg.bits_per_segment);
    const std::size_t w = cfg.segment_count;
    const unsigned b = static_cast<unsigned>(cfg.bits_per_segment);
    const std::size_t regions = std::size_t(1) << b;

    // Per-segment squared gap for every possible code.
    const std::vector<double> query_paa = paa(query, w);
    std::vector<double> gap_sq(w * regions);
    for (std::size_t j = 0; j < w; ++j)
        for (std::size_t c = 0; c < regions; ++c) {
            double g = cell_gap(query_paa[j], static_cast<std::uint8_t>(c), bp);
            gap_sq[j * regions + c] = g * g;
        }

    idx.load_summaries();
    const std::uint64_t n_records = idx.record_count();
    const double scale = double(cfg.series_len) / double(w);

    // Phase 1: lower bounds for every record, embarrassingly parallel.
    std::vector<double> bound_sq(n_records);
    auto compute_range = [&](std::uint64_t from, std::uint64_t to) {
        std::vector<std::uint8_t> codes(w);
        for (std::uint64_t rank = from; rank < to; ++rank) {
            const std::uint8_t* key = idx.summary_entry(rank);
            std::fill(codes.begin(), codes.end(), 0);
            std::size_t pos = 0;
            for (unsigned i = 0; i < b; ++i)
                for (std::size_t j = 0; j < w; ++j, ++pos) {
                    unsigned bit = (key[pos >> 3] >> (7 - (pos & 7))) & 1u;
                    codes[j] = static_cast<std::uint8_t>((codes[j] << 1) | bit);
                }
            double s = 0;
            for (std::size_t j = 0; j < w; ++j) s += gap_sq[j * regions + codes[j]];
            bound_sq[rank] = scale * s;
        }
    };
    const unsigned workers = std::max(1u, opt.workers);
    if (workers == 1 || n_records < 2 * workers) {
        compute_range(0, n_records);
    } else {
        std::vector<std::thread> pool;
        const std::uint64_t chunk = (n_records + workers - 1) / workers;
        for (unsigned t = 0; t < workers; ++t) {
            std::uint64_t from = t * chunk;
            std::uint64_t to = std::min(n_records, from + chunk);
            if (from < to) pool.emplace_back(compute_range, from, to);
        }
        for (auto& th : pool) th.join();
    }

    // Phase 2: sequential gated scan in rank order.
    detail::Best best;
    best.offer(seed.distance * seed.distance, seed.offset);
    QueryResult r;
    r.counters = seed.counters;
    for (std::uint64_t rank = 0; rank < n_records; ++rank) {
        ++r.counters.summaries_scanned;
        if (!(bound_sq[rank] < best.dist_sq)) {
            ++r.counters.records_pruned;
            if (pruned_ranks) pruned_ranks->push_back(rank);
            continue;
        }
        std::vector<double> s = idx.fetch_series_by_rank(rank);
        ++r.counters.series_fetched;
        double d_sq = squared_distance_abandon(query.values, s, best.dist_sq);
        best.offer(d_sq, idx.summary_raw_offset(rank));
    }
    r.offset = best.offset;
    r.distance = std::sqrt(best.dist_sq);
    r.counters.wall_ms = clock.ms();
    return r;
}

} // namespace coconut
