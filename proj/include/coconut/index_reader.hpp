#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coconut/error.hpp"
#include "coconut/index_format.hpp"
#include "coconut/io.hpp"
#include "coconut/raw_dataset.hpp"
#include "coconut/summarization.hpp"

namespace coconut {

/// Read-side view of an index file. The header, leaf directory and internal
/// nodes are loaded and validated up front; leaf entries, the summary array
/// and raw series are read on demand through counted I/O.
class IndexReader {
public:
    explicit IndexReader(const std::filesystem::path& index_path)
        : path_(index_path), file_(index_path, "rb", &index_io_) {
        std::error_code ec;
        const std::uint64_t actual_size = std::filesystem::file_size(index_path, ec);
        if (ec) throw IoError("cannot stat '" + index_path.string() + "'");
        if (actual_size < 4)
            throw FormatError("'" + index_path.string() + "' is not an index file");
        std::uint8_t magic[4];
        file_.read_at(0, magic, 4);
        if (std::memcmp(magic, INDEX_MAGIC, 4) != 0)
            throw FormatError("'" + index_path.string() + "' is not an index file (bad magic)");
        if (actual_size < INDEX_HEADER_SIZE)
            throw IntegrityError("index file '" + index_path.string() + "' is truncated");

        std::uint8_t header_bytes[INDEX_HEADER_SIZE];
        file_.read_at(0, header_bytes, sizeof header_bytes);
        header_ = IndexHeader::decode(header_bytes);
        if (header_.file_size != actual_size)
            throw IntegrityError("index file size " + std::to_string(actual_size) +
                                 " does not match recorded size " +
                                 std::to_string(header_.file_size));
        validate_regions();
        load_directory();
        load_internal();
    }

    const IndexHeader& header() const { return header_; }
    const std::vector<LeafDirEntry>& directory() const { return dir_; }
    std::uint64_t leaf_count() const { return header_.leaf_count; }
    std::uint64_t record_count() const { return header_.record_count; }

    std::uint32_t leaf_level(std::uint64_t leaf) const {
        if (header_.node_type != NodeType::trie)
            throw ConfigError("leaf levels exist only in trie indexes");
        return leaf_levels_.at(leaf);
    }

    TreeNode tree_node(std::uint64_t ref) const {
        if (ref >= header_.internal_count)
            throw IntegrityError("internal node reference out of range");
        return TreeNode::decode(internal_.data() + ref * INTERNAL_PAGE_SIZE,
                                header_.key_bytes());
    }

    TrieNode trie_node(std::uint64_t ref) const {
        if (ref >= header_.internal_count)
            throw IntegrityError("internal node reference out of range");
        const std::uint64_t at = load_u64le(internal_.data() + 8 * ref);
        if (at >= internal_.size())
            throw IntegrityError("trie node offset out of range");
        return TrieNode::decode(internal_.data() + at, internal_.size() - at,
                                header_.key_bytes());
    }

    /// Descend the node structure to the leaf whose key range holds `key`
    /// (the rightmost leaf whose first key is <= key; the first leaf when
    /// key precedes everything).
    std::uint64_t locate_leaf(const InvSaxKey& key) const {
        require_nonempty();
        if (header_.leaf_count == 1) return 0;
        if (header_.node_type == NodeType::tree) {
            std::uint64_t ref = header_.root_ref;
            while (true) {
                TreeNode n = tree_node(ref);
                std::size_t idx = pick_child(n.first_keys, key.bytes);
                if (n.children_are_leaves) return n.child_refs[idx];
                ref = n.child_refs[idx];
            }
        }
        std::uint64_t ref = header_.root_ref;
        while (true) {
            TrieNode n = trie_node(ref);
            std::vector<std::vector<std::uint8_t>> firsts;
            firsts.reserve(n.children.size());
            for (const auto& c : n.children) firsts.push_back(c.first_key);
            const TrieChild& c = n.children[pick_child(firsts, key.bytes)];
            if (c.is_leaf) return c.ref;
            ref = c.ref;
        }
    }

    /// Same answer computed directly over the leaf directory; the node
    /// descent must always agree with this.
    std::uint64_t locate_leaf_flat(const InvSaxKey& key) const {
        require_nonempty();
        std::size_t lo = 0, hi = dir_.size();
        while (lo < hi) { // upper_bound over leaf first keys
            std::size_t mid = (lo + hi) / 2;
            if (key.bytes < dir_[mid].first_key)
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo == 0 ? 0 : lo - 1;
    }

    /// One leaf's entries, read in a single sequential request.
    struct LeafView {
        std::uint64_t count = 0;
        std::size_t entry_size = 0;
        std::size_t key_bytes = 0;
        std::uint32_t series_len = 0;
        bool materialized = false;
        std::vector<std::uint8_t> blob;

        const std::uint8_t* entry(std::uint64_t i) const { return blob.data() + i * entry_size; }
        InvSaxKey key(std::uint64_t i) const {
            return InvSaxKey{{entry(i), entry(i) + key_bytes}};
        }
        std::uint64_t offset(std::uint64_t i) const { return load_u64le(entry(i) + key_bytes); }
        std::vector<double> series(std::uint64_t i) const {
            if (!materialized) throw ConfigError("leaf carries no series payloads");
            const std::uint8_t* p = entry(i) + key_bytes + 8;
            std::vector<double> out(series_len);
            for (std::uint32_t k = 0; k < series_len; ++k) out[k] = load_f32le(p + 4 * k);
            return out;
        }
    };

    LeafView read_leaf(std::uint64_t leaf) {
        if (leaf >= dir_.size()) throw IntegrityError("leaf reference out of range");
        LeafView v;
        v.count = dir_[leaf].count;
        v.entry_size = header_.leaf_entry_size();
        v.key_bytes = header_.key_bytes();
        v.series_len = header_.series_len;
        v.materialized = header_.materialized;
        v.blob.resize(v.count * v.entry_size);
        file_.read_at(dir_[leaf].file_offset, v.blob.data(), v.blob.size());
        return v;
    }

    /// Load the sorted (key, offset) array into memory for scanning.
    void load_summaries() {
        if (!summaries_.empty() || header_.record_count == 0) return;
        summaries_.resize(header_.record_count * header_.summary_entry_size());
        file_.read_at(header_.summary_offset, summaries_.data(), summaries_.size());
    }

    const std::uint8_t* summary_entry(std::uint64_t rank) const {
        return summaries_.data() + rank * header_.summary_entry_size();
    }
    std::uint64_t summary_raw_offset(std::uint64_t rank) const {
        return load_u64le(summary_entry(rank) + header_.key_bytes());
    }

    /// Attach the raw series file behind a non-materialized index. The file's
    /// content hash must match the one recorded at build time.
    void attach_raw(const std::filesystem::path& raw_path) {
        const std::uint64_t h = hash_file(raw_path);
        if (h != header_.raw_file_hash)
            throw IntegrityError("raw file '" + raw_path.string() +
                                 "' does not match the file this index was built from");
        raw_series_count(raw_path, header_.series_len); // format check
        raw_.emplace(raw_path, header_.series_len, &raw_io_);
        raw_path_ = raw_path;
    }

    bool raw_attached() const { return raw_.has_value(); }

    /// Series lookup by raw byte offset, through the attached raw file.
    std::vector<double> fetch_series(std::uint64_t raw_offset) {
        if (!raw_) throw ConfigError("no raw file attached to index");
        return raw_->read_series_at_offset(raw_offset).values;
    }

    /// Series lookup by sorted rank, served from leaf payloads when the index
    /// is materialized and from the raw file otherwise.
    std::vector<double> fetch_series_by_rank(std::uint64_t rank) {
        if (rank >= header_.record_count) throw IntegrityError("record rank out of range");
        if (!header_.materialized) {
            if (summaries_.empty()) load_summaries();
            return fetch_series(summary_raw_offset(rank));
        }
        const std::uint64_t leaf = leaf_of_rank(rank);
        const std::uint64_t slot = rank - leaf_start_rank_[leaf];
        const std::size_t n = header_.series_len;
        std::vector<std::uint8_t> buf(4 * n);
        file_.read_at(dir_[leaf].file_offset + slot * header_.leaf_entry_size() +
                          header_.summary_entry_size(),
                      buf.data(), buf.size());
        std::vector<double> out(n);
        for (std::size_t k = 0; k < n; ++k) out[k] = load_f32le(buf.data() + 4 * k);
        return out;
    }

    std::uint64_t leaf_of_rank(std::uint64_t rank) const {
        auto it = std::upper_bound(leaf_start_rank_.begin(), leaf_start_rank_.end(), rank);
        return static_cast<std::uint64_t>(it - leaf_start_rank_.begin()) - 1;
    }

    const IoCounters& index_io() const { return index_io_; }
    const IoCounters& raw_io() const { return raw_io_; }
    void reset_io() {
        index_io_ = IoCounters{};
        raw_io_ = IoCounters{};
    }

private:
    void require_nonempty() const {
        if (header_.leaf_count == 0)
            throw ConfigError("index '" + path_.string() + "' holds no records");
    }

    static std::size_t pick_child(const std::vector<std::vector<std::uint8_t>>& firsts,
                                  const std::vector<std::uint8_t>& key) {
        std::size_t lo = 0, hi = firsts.size();
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (key < firsts[mid])
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo == 0 ? 0 : lo - 1;
    }

    void validate_regions() const {
        const IndexHeader& h = header_;
        const std::uint64_t summary_end =
            h.summary_offset + h.record_count * h.summary_entry_size();
        const std::uint64_t dir_end = h.leaf_dir_offset + h.leaf_count * h.dir_entry_size();
        bool ok = h.summary_offset == INDEX_HEADER_SIZE && summary_end <= h.file_size &&
                  h.leaf_dir_offset >= summary_end - (h.materialized ? 0 : 0) &&
                  dir_end <= h.file_size && h.internal_offset == dir_end &&
                  h.internal_offset <= h.file_size;
        if (h.materialized)
            ok = ok && h.leaf_region_offset == summary_end &&
                 h.leaf_dir_offset == h.leaf_region_offset + h.record_count * h.leaf_entry_size();
        else
            ok = ok && h.leaf_region_offset == h.summary_offset && h.leaf_dir_offset == summary_end;
        if (h.node_type == NodeType::tree)
            ok = ok && h.file_size == h.internal_offset + h.internal_count * INTERNAL_PAGE_SIZE;
        else
            ok = ok && h.leaf_level_offset >= h.internal_offset &&
                 h.file_size == h.leaf_level_offset + 4 * h.leaf_count;
        if (h.leaf_count > 0 && h.internal_count > 0 && h.root_ref >= h.internal_count) ok = false;
        if (!ok)
            throw IntegrityError("index '" + path_.string() + "' has inconsistent region layout");
    }

    void load_directory() {
        dir_.reserve(header_.leaf_count);
        leaf_start_rank_.reserve(header_.leaf_count);
        const std::size_t esz = header_.dir_entry_size();
        std::vector<std::uint8_t> bytes(header_.leaf_count * esz);
        if (!bytes.empty()) file_.read_at(header_.leaf_dir_offset, bytes.data(), bytes.size());
        std::uint64_t rank = 0;
        for (std::uint64_t i = 0; i < header_.leaf_count; ++i) {
            LeafDirEntry e = LeafDirEntry::decode(bytes.data() + i * esz, header_.key_bytes());
            const std::uint64_t expect =
                header_.leaf_region_offset + rank * header_.leaf_entry_size();
            if (e.file_offset != expect || e.count == 0)
                throw IntegrityError("leaf directory entry " + std::to_string(i) +
                                     " is inconsistent");
            leaf_start_rank_.push_back(rank);
            rank += e.count;
            dir_.push_back(std::move(e));
        }
        if (rank != header_.record_count)
            throw IntegrityError("leaf directory does not cover all records");

        if (header_.node_type == NodeType::trie && header_.leaf_count > 0) {
            std::vector<std::uint8_t> lv(4 * header_.leaf_count);
            file_.read_at(header_.leaf_level_offset, lv.data(), lv.size());
            leaf_levels_.resize(header_.leaf_count);
            for (std::uint64_t i = 0; i < header_.leaf_count; ++i)
                leaf_levels_[i] = load_u32le(lv.data() + 4 * i);
        }
    }

    void load_internal() {
        const std::uint64_t end = header_.node_type == NodeType::tree
                                      ? header_.internal_offset +
                                            header_.internal_count * INTERNAL_PAGE_SIZE
                                      : header_.leaf_level_offset;
        internal_.resize(end - header_.internal_offset);
        if (!internal_.empty())
            file_.read_at(header_.internal_offset, internal_.data(), internal_.size());
        if (header_.node_type == NodeType::trie && header_.internal_count * 8 > internal_.size())
            throw IntegrityError("trie node table overruns its region");
    }

    std::filesystem::path path_;
    IoCounters index_io_;
    IoCounters raw_io_;
    CountingFile file_;
    IndexHeader header_;
    std::vector<LeafDirEntry> dir_;
    std::vector<std::uint64_t> leaf_start_rank_;
    std::vector<std::uint32_t> leaf_levels_;
    std::vector<std::uint8_t> internal_;
    std::vector<std::uint8_t> summaries_;
    std::optional<RawDataset> raw_;
    std::filesystem::path raw_path_;
};

} // namespace coconut
