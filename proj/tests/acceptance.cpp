// End-to-end acceptance checks at full scale: one line of output per
// criterion, nonzero exit when any of them fails.
//
//   1. exact search equals a linear scan on 100K series, four index variants
//   2. sortable-key codec round-trip and order agreement
//   3. distance lower bound never overshoots, pruning never drops the answer
//   4. interleaved keys restore similarity locality that word order loses
//   5. full leaves at fill 1.0, equal depth; trie occupancy sits below tree
//   6. construction I/O stays within the budgeted passes
//   7. wider approximate search radius never worsens the mean distance
//   8. builds and parallel searches are deterministic

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "coconut/coconut.hpp"

namespace fs = std::filesystem;
using namespace coconut;

namespace {

int failures = 0;

void report(int number, bool ok, const std::string& what, const std::string& detail) {
    if (!ok) ++failures;
    std::printf("%s  %d. %s: %s\n", ok ? "PASS" : "FAIL", number, what.c_str(),
                detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
    va_list ap;
    va_start(ap, f);
    char buf[512];
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool same_file_bytes(const fs::path& a, const fs::path& b) {
    if (fs::file_size(a) != fs::file_size(b)) return false;
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    std::vector<char> ba(1 << 20), bb(1 << 20);
    while (fa && fb) {
        fa.read(ba.data(), ba.size());
        fb.read(bb.data(), bb.size());
        if (fa.gcount() != fb.gcount()) return false;
        if (!std::equal(ba.begin(), ba.begin() + fa.gcount(), bb.begin())) return false;
    }
    return fa.eof() == fb.eof();
}

// Shared corpus: 100K random walks of length 256 plus 100 query series.
struct Corpus {
    fs::path dir = fs::temp_directory_path() / "coconut-acceptance";
    EngineConfig cfg;
    std::vector<DataSeries> queries;
    std::vector<QueryResult> oracle; // linear-scan answer per query
    double oracle_seconds = 0;

    fs::path raw() const { return dir / "raw.bin"; }
    fs::path index(const char* name) const { return dir / (std::string(name) + ".idx"); }

    BuildReport build(const char* name, NodeType type, bool mat,
                      std::uint64_t budget = EngineConfig{}.memory_budget) {
        BuildOptions opt;
        opt.config = cfg;
        opt.config.memory_budget = budget;
        opt.node_type = type;
        opt.materialize = mat;
        opt.temp_dir = dir;
        return build_index(raw(), index(name), opt);
    }

    void prepare() {
        fs::remove_all(dir);
        fs::create_directories(dir);
        cfg.series_len = 256;
        cfg.segment_count = 16;
        cfg.bits_per_segment = 8;
        cfg.leaf_capacity = 2000;
        cfg.fill_factor = 1.0;
        std::printf("building the corpus (100000 series of length 256)...\n");
        generate_random_walks(raw(), 100000, cfg.series_len, 424242);
        SplitMix64 rng(555);
        for (int i = 0; i < 100; ++i)
            queries.push_back(random_walk_series(rng, cfg.series_len));

        auto t0 = std::chrono::steady_clock::now();
        RawDataset data(raw(), cfg.series_len);
        for (const DataSeries& q : queries) oracle.push_back(brute_force_nn(data, q));
        oracle_seconds = seconds_since(t0);
        std::printf("linear-scan oracle over 100 queries: %.1f s\n", oracle_seconds);
        std::fflush(stdout);
    }
};

// --- 1 -----------------------------------------------------------------
void criterion_exact_matches_scan(Corpus& c) {
    auto t0 = std::chrono::steady_clock::now();
    struct Variant {
        const char* name;
        NodeType type;
        bool mat;
    };
    const Variant variants[] = {{"tree-plain", NodeType::tree, false},
                                {"tree-mat", NodeType::tree, true},
                                {"trie-plain", NodeType::trie, false},
                                {"trie-mat", NodeType::trie, true}};
    int good = 0, total = 0;
    std::string first_bad;
    for (const Variant& v : variants) {
        c.build(v.name, v.type, v.mat);
        IndexReader idx(c.index(v.name));
        if (!v.mat) idx.attach_raw(c.raw());
        for (std::size_t i = 0; i < c.queries.size(); ++i) {
            QueryResult r = exact_search(idx, c.queries[i]);
            ++total;
            double ref = c.oracle[i].distance;
            if (std::abs(r.distance - ref) <= 1e-6 * std::max(1.0, ref)) {
                ++good;
            } else if (first_bad.empty()) {
                first_bad = fmt("%s query %zu: %.9g vs scan %.9g", v.name, i, r.distance, ref);
            }
        }
    }
    double secs = seconds_since(t0) + c.oracle_seconds;
    bool ok = good == total && secs < 600.0;
    report(1, ok, "exact search equals the linear scan",
           fmt("%d/%d queries within 1e-6 across tree/trie x plain/materialized, %.0f s%s%s",
               good, total, secs, first_bad.empty() ? "" : "; first miss: ",
               first_bad.c_str()));
}

// --- 2 -----------------------------------------------------------------
void criterion_key_codec(Corpus&) {
    std::uint64_t bad_roundtrip = 0, bad_order = 0, checked = 0;

    // exhaustive over every shape with at most 16 key bits
    for (unsigned b = 1; b <= 8; ++b) {
        for (std::size_t w = 1; w * b <= 16; ++w) {
            for (std::uint64_t packed = 0; packed < (1ull << (w * b)); ++packed) {
                SaxWord word;
                word.codes.resize(w);
                for (std::size_t j = 0; j < w; ++j)
                    word.codes[j] =
                        static_cast<std::uint8_t>((packed >> ((w - 1 - j) * b)) & ((1u << b) - 1));
                if (restore_sum(invert_sum(word, b), w, b) != word) ++bad_roundtrip;
                ++checked;
            }
        }
    }

    // random words at the working shape, plus pairwise order agreement
    const std::size_t w = 16;
    const unsigned b = 8;
    SplitMix64 rng(2024);
    auto random_word = [&] {
        SaxWord word;
        word.codes.resize(w);
        for (auto& code : word.codes) code = static_cast<std::uint8_t>(rng.next() & 0xFF);
        return word;
    };
    // reference order: first differing bit of the interleaved sequence
    auto interleaved_less = [&](const SaxWord& x, const SaxWord& y) {
        for (unsigned i = 0; i < b; ++i)
            for (std::size_t j = 0; j < w; ++j) {
                unsigned bx = (x.codes[j] >> (b - 1 - i)) & 1u;
                unsigned by = (y.codes[j] >> (b - 1 - i)) & 1u;
                if (bx != by) return bx < by;
            }
        return false;
    };
    for (int i = 0; i < 100000; ++i) {
        SaxWord word = random_word();
        if (restore_sum(invert_sum(word, b), w, b) != word) ++bad_roundtrip;
        ++checked;
    }
    for (int i = 0; i < 100000; ++i) {
        SaxWord x = random_word(), y = random_word();
        InvSaxKey kx = invert_sum(x, b), ky = invert_sum(y, b);
        bool key_lt = kx.bytes < ky.bytes;
        bool key_gt = ky.bytes < kx.bytes;
        if (key_lt != interleaved_less(x, y) || key_gt != interleaved_less(y, x)) ++bad_order;
    }
    report(2, bad_roundtrip == 0 && bad_order == 0, "sortable keys invert exactly",
           fmt("%" PRIu64 " round-trips (exhaustive through 16 bits + 100000 random), "
               "%" PRIu64 " failures; order agreement on 100000 pairs, %" PRIu64
               " disagreements",
               checked, bad_roundtrip, bad_order));
}

// --- 3 -----------------------------------------------------------------
void criterion_lower_bound_sound(Corpus& c) {
    const Breakpoints bp = compute_breakpoints(c.cfg.bits_per_segment);
    SplitMix64 rng(31337);
    std::uint64_t overshoots = 0;
    double worst_margin = 0;
    for (int i = 0; i < 10000; ++i) {
        DataSeries q = random_walk_series(rng, c.cfg.series_len);
        DataSeries s = random_walk_series(rng, c.cfg.series_len);
        SaxWord word = sax(s, c.cfg, bp);
        double lb = mindist(q, word, c.cfg, bp);
        double ed = euclidean_distance(q, s);
        if (lb > ed + 1e-9) {
            ++overshoots;
            worst_margin = std::max(worst_margin, lb - ed);
        }
    }

    // pruning audit on a live index: everything skipped by the bound must
    // sit at or beyond the answer distance
    fs::path small_raw = c.dir / "audit.bin";
    generate_random_walks(small_raw, 10000, c.cfg.series_len, 777);
    BuildOptions opt;
    opt.config = c.cfg;
    opt.materialize = true;
    opt.temp_dir = c.dir;
    build_index(small_raw, c.dir / "audit.idx", opt);
    IndexReader idx(c.dir / "audit.idx");
    idx.load_summaries();
    RawDataset raw(small_raw, c.cfg.series_len);
    std::uint64_t dropped_answers = 0, audited = 0;
    SplitMix64 qrng(778);
    for (int i = 0; i < 10; ++i) {
        DataSeries q = random_walk_series(qrng, c.cfg.series_len);
        std::vector<std::uint64_t> pruned;
        QueryResult r = exact_search(idx, q, {}, &pruned);
        for (std::uint64_t rank : pruned) {
            double d = euclidean_distance(
                q.values, raw.read_series_at_offset(idx.summary_raw_offset(rank)).values);
            if (d < r.distance - 1e-9 * std::max(1.0, r.distance)) ++dropped_answers;
            ++audited;
        }
    }
    report(3, overshoots == 0 && dropped_answers == 0, "the lower bound never overshoots",
           fmt("10000 query/series pairs, %" PRIu64 " overshoots (worst %.3g); "
               "%" PRIu64 " pruned records audited on 10 searches, %" PRIu64
               " would have beaten the answer",
               overshoots, worst_margin, audited, dropped_answers));
}

// --- 4 -----------------------------------------------------------------
void criterion_key_order_locality(Corpus&) {
    // Four two-segment words over an eight-letter alphabet: (e,c) (e,e)
    // (f,c) (g,e). Word order keeps them as given; interleaved-key order
    // must pull (f,c) — the close match — next to (e,c).
    const unsigned b = 3;
    std::vector<SaxWord> words(4);
    words[0].codes = {4, 2};
    words[1].codes = {4, 4};
    words[2].codes = {5, 2};
    words[3].codes = {6, 4};

    bool word_order_plain =
        words[0] < words[1] && words[1] < words[2] && words[2] < words[3];

    std::vector<std::pair<InvSaxKey, int>> keyed;
    for (int i = 0; i < 4; ++i) keyed.emplace_back(invert_sum(words[i], b), i + 1);
    std::sort(keyed.begin(), keyed.end());
    std::vector<int> order;
    for (auto& [k, id] : keyed) order.push_back(id);

    // pinned key bytes: 6 bits left-aligned in one byte
    bool bytes_ok = keyed[0].first.bytes == std::vector<std::uint8_t>{0x90} && // S1
                    keyed[1].first.bytes == std::vector<std::uint8_t>{0x98} && // S3
                    keyed[2].first.bytes == std::vector<std::uint8_t>{0xC0} && // S2
                    keyed[3].first.bytes == std::vector<std::uint8_t>{0xE0};   // S4
    bool ok = word_order_plain && order == std::vector<int>{1, 3, 2, 4} && bytes_ok;
    report(4, ok, "interleaving restores similarity locality",
           fmt("word order S1,S2,S3,S4; key order S%d,S%d,S%d,S%d (expected S1,S3,S2,S4)",
               order[0], order[1], order[2], order[3]));
}

// --- 5 -----------------------------------------------------------------
void criterion_occupancy_and_balance(Corpus& c) {
    BuildReport tree = c.build("occupancy-tree", NodeType::tree, false);
    BuildReport trie = c.build("occupancy-trie", NodeType::trie, false);

    IndexReader idx(c.index("occupancy-tree"));
    std::uint64_t full = 0;
    for (std::size_t i = 0; i + 1 < idx.directory().size(); ++i)
        if (idx.directory()[i].count == c.cfg.leaf_capacity) ++full;
    bool non_last_full = full == idx.leaf_count() - 1;

    // every leaf at the same distance from the root
    bool equal_depth = true;
    const std::uint32_t depth = idx.header().depth;
    auto walk = [&](auto&& self, std::uint64_t ref, std::uint32_t level) -> void {
        TreeNode n = idx.tree_node(ref);
        for (std::size_t i = 0; i < n.child_count(); ++i) {
            if (n.children_are_leaves) {
                if (level != depth) equal_depth = false;
            } else {
                self(self, n.child_refs[i], level + 1);
            }
        }
    };
    walk(walk, idx.header().root_ref, 1);

    bool ok = non_last_full && equal_depth && tree.mean_leaf_utilization_full >= 0.99 &&
              tree.mean_leaf_utilization >= 0.95 &&
              trie.mean_leaf_utilization < tree.mean_leaf_utilization;
    report(5, ok, "bulk loading packs leaves and keeps the tree balanced",
           fmt("%" PRIu64 "/%" PRIu64
               " non-last leaves exactly full, util %.4f (excl. last %.4f), equal depth %s; "
               "trie util %.4f < tree util %.4f",
               full, idx.leaf_count() - 1, tree.mean_leaf_utilization,
               tree.mean_leaf_utilization_full, equal_depth ? "yes" : "NO",
               trie.mean_leaf_utilization, tree.mean_leaf_utilization));
}

// --- 6 -----------------------------------------------------------------
void criterion_io_envelope(Corpus& c) {
    // 512 KiB of sort memory over 100K 24-byte records: five runs, merged
    // in one level. Raw file read once; record traffic inside four passes.
    BuildReport rep = c.build("io-probe", NodeType::tree, false, 512 << 10);
    const std::uint64_t raw_bytes = fs::file_size(c.raw());
    const std::uint64_t record_bytes =
        rep.record_count * (c.cfg.key_bytes() + 8);
    bool ok = rep.runs_created >= 4 && rep.raw_io.bytes_read <= raw_bytes * 105 / 100 &&
              rep.sort_io.bytes_written <= record_bytes * 205 / 100 &&
              rep.sort_io.bytes_read <= record_bytes * 205 / 100;
    report(6, ok, "construction stays within the I/O budget",
           fmt("%" PRIu64 " runs; raw read %.3fx its size; record bytes written %.2fx, "
               "read %.2fx (envelope 2.05x each)",
               rep.runs_created, double(rep.raw_io.bytes_read) / double(raw_bytes),
               double(rep.sort_io.bytes_written) / double(record_bytes),
               double(rep.sort_io.bytes_read) / double(record_bytes)));
}

// --- 7 -----------------------------------------------------------------
void criterion_radius_quality(Corpus& c) {
    IndexReader idx(c.index("tree-mat"));
    double mean_r1 = 0, mean_r10 = 0;
    for (const DataSeries& q : c.queries) {
        mean_r1 += approx_search(idx, q, 1).distance;
        mean_r10 += approx_search(idx, q, 10).distance;
    }
    mean_r1 /= double(c.queries.size());
    mean_r10 /= double(c.queries.size());
    report(7, mean_r10 <= mean_r1, "a wider search radius never hurts on average",
           fmt("mean distance %.4f at radius 10 vs %.4f at radius 1 over 100 queries",
               mean_r10, mean_r1));
}

// --- 8 -----------------------------------------------------------------
void criterion_determinism(Corpus& c) {
    c.build("rebuild-probe", NodeType::tree, false);
    bool bytes_equal = same_file_bytes(c.index("tree-plain"), c.index("rebuild-probe"));

    IndexReader idx(c.index("tree-mat"));
    int mismatches = 0;
    for (const DataSeries& q : c.queries) {
        ExactOptions one, eight;
        one.workers = 1;
        eight.workers = 8;
        QueryResult a = exact_search(idx, q, one);
        QueryResult b = exact_search(idx, q, eight);
        if (a.offset != b.offset || a.distance != b.distance) ++mismatches;
    }
    report(8, bytes_equal && mismatches == 0, "construction and search are deterministic",
           fmt("rebuild byte-identical: %s; 1-worker vs 8-worker answers differ on %d/100 "
               "queries",
               bytes_equal ? "yes" : "NO", mismatches));
}

} // namespace

int main() {
    Corpus corpus;
    corpus.prepare();
    criterion_exact_matches_scan(corpus);
    criterion_key_codec(corpus);
    criterion_lower_bound_sound(corpus);
    criterion_key_order_locality(corpus);
    criterion_occupancy_and_balance(corpus);
    criterion_io_envelope(corpus);
    criterion_radius_quality(corpus);
    criterion_determinism(corpus);
    if (failures == 0) {
        std::printf("all 8 acceptance checks passed\n");
    } else {
        std::printf("%d acceptance check(s) FAILED\n", failures);
    }
    return failures;
}
