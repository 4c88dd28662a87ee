#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "coconut/error.hpp"
#include "coconut/io.hpp"
#include "coconut/summarization.hpp"

namespace coconut {

/// The sortable unit: interleaved key plus byte offset into the raw file,
/// optionally carrying the raw series (materialized variants).
struct IndexRecord {
    InvSaxKey key;
    std::uint64_t offset = 0;

    bool operator==(const IndexRecord&) const = default;
    auto operator<=>(const IndexRecord&) const = default; // (key, offset) order
};

/// On-disk/in-buffer layout of one fixed-size record:
///   key bytes || offset (u64 little-endian) || optional payload
struct RecordLayout {
    std::size_t key_bytes = 0;
    std::size_t payload_bytes = 0;

    std::size_t record_size() const { return key_bytes + 8 + payload_bytes; }
    std::size_t offset_pos() const { return key_bytes; }
    std::size_t payload_pos() const { return key_bytes + 8; }

    void encode(const IndexRecord& rec, std::uint8_t* out) const {
        std::memcpy(out, rec.key.bytes.data(), key_bytes);
        store_u64le(out + key_bytes, rec.offset);
    }

    IndexRecord decode(const std::uint8_t* in) const {
        IndexRecord rec;
        rec.key.bytes.assign(in, in + key_bytes);
        rec.offset = load_u64le(in + key_bytes);
        return rec;
    }

    std::uint64_t offset_of(const std::uint8_t* rec) const {
        return load_u64le(rec + key_bytes);
    }

    /// (key, offset) comparison of two encoded records; payload never counts.
    int compare(const std::uint8_t* a, const std::uint8_t* b) const {
        int c = std::memcmp(a, b, key_bytes);
        if (c != 0) return c;
        std::uint64_t oa = offset_of(a), ob = offset_of(b);
        return oa < ob ? -1 : (oa > ob ? 1 : 0);
    }
};

/// Sorted run files produced by the partitioning phase.
struct RunSet {
    std::vector<std::filesystem::path> paths;
    std::vector<std::uint64_t> counts;
    std::size_t record_size = 0;

    std::uint64_t total_records() const {
        return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    }
};

/// Pull one encoded record into `out`; false at end of stream.
using RecordSource = std::function<bool(std::uint8_t* out)>;
/// Consume one encoded record.
using RecordSink = std::function<void(const std::uint8_t* rec)>;

inline RecordSource vector_source(const std::vector<std::uint8_t>& flat, std::size_t record_size) {
    auto pos = std::make_shared<std::size_t>(0);
    return [&flat, record_size, pos](std::uint8_t* out) {
        if (*pos + record_size > flat.size()) return false;
        std::memcpy(out, flat.data() + *pos, record_size);
        *pos += record_size;
        return true;
    };
}

/// External merge sort of fixed-size records under a memory budget:
/// sorted-run partitioning plus k-way merge. Deterministic: ties on
/// (key, offset) keep input order.
class ExternalSorter {
public:
    ExternalSorter(RecordLayout layout, std::uint64_t memory_budget,
                   std::filesystem::path temp_dir, std::string job_tag)
        : layout_(layout),
          memory_budget_(memory_budget),
          temp_dir_(std::move(temp_dir)),
          job_tag_(std::move(job_tag)) {
        if (memory_budget_ < 2 * layout_.record_size())
            throw ConfigError("memory budget " + std::to_string(memory_budget_) +
                              " holds fewer than 2 records of " +
                              std::to_string(layout_.record_size()) + " bytes");
    }

    std::uint64_t buffer_capacity_records() const {
        return memory_budget_ / layout_.record_size();
    }

    /// Scan the input in memory-sized chunks, sort each, flush it as a run.
    RunSet partition_into_runs(const RecordSource& source) {
        RunSet runs;
        runs.record_size = layout_.record_size();
        std::vector<std::uint8_t> buffer;
        try {
            while (true) {
                std::uint64_t got = fill_buffer(source, buffer);
                if (got == 0) break;
                sort_buffer(buffer, got);
                flush_run(runs, buffer, got);
                if (got < buffer_capacity_records()) break; // source exhausted
            }
        } catch (...) {
            discard_runs(runs);
            throw;
        }
        return runs;
    }

    /// Merge sorted runs into one globally ordered stream. Run files are
    /// deleted on success. Multi-level only when the run count exceeds the
    /// merge fan-in.
    void merge_runs(RunSet runs, const RecordSink& sink) {
        const std::size_t fan_in = merge_fan_in();
        while (runs.paths.size() > fan_in) {
            runs = reduce_runs(runs, fan_in);
            ++merge_levels_;
        }
        if (!runs.paths.empty()) {
            merge_into(runs, sink);
            ++merge_levels_;
        }
        discard_runs(runs);
    }

    /// Full pipeline. Input that fits the budget is sorted in memory and
    /// streamed straight out, with no run files at all.
    void sort(const RecordSource& source, const RecordSink& sink) {
        std::vector<std::uint8_t> buffer;
        std::uint64_t got = fill_buffer(source, buffer);
        if (got < buffer_capacity_records()) { // everything fit in one buffer
            sort_buffer(buffer, got);
            const std::size_t rs = layout_.record_size();
            for (std::uint64_t i = 0; i < got; ++i) sink(buffer.data() + i * rs);
            return;
        }
        RunSet runs;
        runs.record_size = layout_.record_size();
        try {
            sort_buffer(buffer, got);
            flush_run(runs, buffer, got);
            while (true) {
                got = fill_buffer(source, buffer);
                if (got == 0) break;
                sort_buffer(buffer, got);
                flush_run(runs, buffer, got);
                if (got < buffer_capacity_records()) break;
            }
        } catch (...) {
            discard_runs(runs);
            throw;
        }
        runs_created_total_ = runs.paths.size();
        merge_runs(std::move(runs), sink);
    }

    const IoCounters& counters() const { return counters_; }
    std::uint64_t runs_created() const { return runs_created_total_; }
    std::uint32_t merge_levels() const { return merge_levels_; }

    std::size_t merge_fan_in() const {
        const std::size_t min_buffer =
            std::max<std::size_t>(layout_.record_size(), 4096);
        return std::max<std::size_t>(2, memory_budget_ / min_buffer - 1);
    }

private:
    std::uint64_t fill_buffer(const RecordSource& source, std::vector<std::uint8_t>& buffer) {
        const std::size_t rs = layout_.record_size();
        const std::uint64_t cap = buffer_capacity_records();
        buffer.resize(cap * rs);
        std::uint64_t got = 0;
        while (got < cap && source(buffer.data() + got * rs)) ++got;
        return got;
    }

    void sort_buffer(std::vector<std::uint8_t>& buffer, std::uint64_t count) {
        const std::size_t rs = layout_.record_size();
        std::vector<std::uint64_t> order(count);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::uint64_t a, std::uint64_t b) {
            int c = layout_.compare(buffer.data() + a * rs, buffer.data() + b * rs);
            return c != 0 ? c < 0 : a < b; // stable on full ties
        });
        std::vector<std::uint8_t> sorted(count * rs);
        for (std::uint64_t i = 0; i < count; ++i)
            std::memcpy(sorted.data() + i * rs, buffer.data() + order[i] * rs, rs);
        buffer.swap(sorted);
    }

    void flush_run(RunSet& runs, const std::vector<std::uint8_t>& buffer, std::uint64_t count) {
        auto path = temp_dir_ / (job_tag_ + ".run" + std::to_string(next_run_id_++) + ".tmp");
        CountingFile f(path, "wb", &counters_);
        f.write(buffer.data(), count * layout_.record_size());
        f.close();
        runs.paths.push_back(path);
        runs.counts.push_back(count);
        runs_created_total_ = std::max<std::uint64_t>(runs_created_total_, next_run_id_);
    }

    // Buffered reader over one run with order verification.
    struct RunCursor {
        CountingFile file;
        std::filesystem::path path;
        std::uint64_t remaining = 0;
        std::vector<std::uint8_t> buf;
        std::size_t buf_records = 0, buf_pos = 0;
        std::vector<std::uint8_t> prev;
        bool has_prev = false;
    };

    void refill(RunCursor& c) {
        const std::size_t rs = layout_.record_size();
        const std::size_t want =
            std::min<std::uint64_t>(c.remaining, std::max<std::size_t>(1, c.buf.size() / rs));
        if (want == 0) {
            c.buf_records = c.buf_pos = 0;
            return;
        }
        c.file.read(c.buf.data(), want * rs);
        c.buf_records = want;
        c.buf_pos = 0;
        c.remaining -= want;
    }

    const std::uint8_t* cursor_head(RunCursor& c) const {
        return c.buf.data() + c.buf_pos * layout_.record_size();
    }

    void merge_into(const RunSet& runs, const RecordSink& sink) {
        const std::size_t rs = layout_.record_size();
        const std::size_t k = runs.paths.size();
        // one input buffer per run plus one output-sized share
        const std::size_t buf_bytes = std::max<std::size_t>(
            rs, static_cast<std::size_t>(memory_budget_ / (k + 1) / rs * rs));

        std::vector<RunCursor> cursors(k);
        for (std::size_t i = 0; i < k; ++i) {
            cursors[i].file = CountingFile(runs.paths[i], "rb", &counters_);
            cursors[i].path = runs.paths[i];
            cursors[i].remaining = runs.counts[i];
            cursors[i].buf.resize(std::max<std::size_t>(buf_bytes, rs));
            cursors[i].prev.resize(rs);
            refill(cursors[i]);
        }

        auto greater = [&](std::size_t a, std::size_t b) {
            int c = layout_.compare(cursor_head(cursors[a]), cursor_head(cursors[b]));
            return c != 0 ? c > 0 : a > b; // earlier run wins full ties
        };
        std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(greater)> heap(greater);
        for (std::size_t i = 0; i < k; ++i)
            if (cursors[i].buf_records > 0) heap.push(i);

        while (!heap.empty()) {
            std::size_t i = heap.top();
            heap.pop();
            RunCursor& c = cursors[i];
            const std::uint8_t* rec = cursor_head(c);
            if (c.has_prev && layout_.compare(c.prev.data(), rec) > 0)
                throw IntegrityError("run '" + c.path.string() +
                                     "' violates its sort order");
            std::memcpy(c.prev.data(), rec, rs);
            c.has_prev = true;
            sink(rec);
            ++c.buf_pos;
            if (c.buf_pos == c.buf_records) refill(c);
            if (c.buf_records > 0) heap.push(i);
        }
    }

    RunSet reduce_runs(RunSet& runs, std::size_t fan_in) {
        RunSet out;
        out.record_size = runs.record_size;
        for (std::size_t base = 0; base < runs.paths.size(); base += fan_in) {
            RunSet group;
            group.record_size = runs.record_size;
            const std::size_t end = std::min(runs.paths.size(), base + fan_in);
            for (std::size_t i = base; i < end; ++i) {
                group.paths.push_back(runs.paths[i]);
                group.counts.push_back(runs.counts[i]);
            }
            auto path =
                temp_dir_ / (job_tag_ + ".run" + std::to_string(next_run_id_++) + ".tmp");
            const std::uint64_t group_total = group.total_records();
            {
                CountingFile f(path, "wb", &counters_);
                merge_into(group, [&](const std::uint8_t* rec) {
                    f.write(rec, layout_.record_size());
                });
            }
            discard_runs(group);
            out.paths.push_back(path);
            out.counts.push_back(group_total);
        }
        runs.paths.clear();
        runs.counts.clear();
        return out;
    }

    static void discard_runs(RunSet& runs) {
        for (const auto& p : runs.paths) {
            std::error_code ec;
            std::filesystem::remove(p, ec);
        }
        runs.paths.clear();
        runs.counts.clear();
    }

    RecordLayout layout_;
    std::uint64_t memory_budget_;
    std::filesystem::path temp_dir_;
    std::string job_tag_;
    IoCounters counters_;
    std::uint64_t next_run_id_ = 0;
    std::uint64_t runs_created_total_ = 0;
    std::uint32_t merge_levels_ = 0;
};

} // namespace coconut
