#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "coconut/config.hpp"
#include "coconut/error.hpp"
#include "coconut/io.hpp"

namespace coconut {

// ---------------------------------------------------------------------------
// One index file holds, in order:
//
//   header | sorted summary array | leaf region* | leaf directory
//          | internal nodes | leaf level table**
//
//   *  materialized indexes only; otherwise the leaf region aliases the
//      summary array (leaves are contiguous slices of the sorted order)
//   ** trie indexes only
//
// All integers are little-endian. The summary array is the per-record
// (key, offset) sequence in (key, offset) order; it doubles as the scan
// array for exact search.
// ---------------------------------------------------------------------------

inline constexpr std::size_t INDEX_HEADER_SIZE = 160;
inline constexpr std::size_t INTERNAL_PAGE_SIZE = 4096;
inline constexpr char INDEX_MAGIC[4] = {'C', 'O', 'C', 'N'};
inline constexpr std::uint16_t INDEX_VERSION = 1;

enum class NodeType : std::uint8_t { tree = 0, trie = 1 };

enum IndexFlags : std::uint8_t {
    INDEX_FLAG_MATERIALIZED = 1,
};

struct IndexHeader {
    NodeType node_type = NodeType::tree;
    bool materialized = false;
    std::uint32_t series_len = 0;
    std::uint32_t segment_count = 0;
    std::uint32_t bits_per_segment = 0;
    std::uint32_t leaf_capacity = 0;
    double fill_factor = 1.0;
    std::uint64_t record_count = 0;
    std::uint64_t raw_file_hash = 0;
    std::uint64_t summary_offset = 0;
    std::uint64_t leaf_region_offset = 0;
    std::uint64_t leaf_dir_offset = 0;
    std::uint64_t leaf_count = 0;
    std::uint64_t internal_offset = 0;
    std::uint64_t internal_count = 0;
    std::uint64_t root_ref = 0;
    std::uint32_t depth = 0;
    std::uint64_t leaf_level_offset = 0; // 0 unless node_type == trie
    std::uint64_t file_size = 0;

    std::size_t key_bytes() const { return (segment_count * bits_per_segment + 7) / 8; }
    std::size_t summary_entry_size() const { return key_bytes() + 8; }
    std::size_t leaf_entry_size() const {
        return summary_entry_size() + (materialized ? 4 * std::size_t(series_len) : 0);
    }
    std::size_t dir_entry_size() const { return 16 + key_bytes(); }

    EngineConfig config() const {
        EngineConfig cfg;
        cfg.series_len = series_len;
        cfg.segment_count = segment_count;
        cfg.bits_per_segment = bits_per_segment;
        cfg.leaf_capacity = leaf_capacity;
        cfg.fill_factor = fill_factor;
        return cfg;
    }

    void encode(std::uint8_t* out) const {
        std::memset(out, 0, INDEX_HEADER_SIZE);
        std::memcpy(out, INDEX_MAGIC, 4);
        store_u16le(out + 4, INDEX_VERSION);
        out[6] = static_cast<std::uint8_t>(node_type);
        out[7] = materialized ? INDEX_FLAG_MATERIALIZED : 0;
        store_u32le(out + 8, series_len);
        store_u32le(out + 12, segment_count);
        store_u32le(out + 16, bits_per_segment);
        store_u32le(out + 20, leaf_capacity);
        store_f64le(out + 24, fill_factor);
        store_u64le(out + 32, record_count);
        store_u64le(out + 40, raw_file_hash);
        store_u64le(out + 48, summary_offset);
        store_u64le(out + 56, leaf_region_offset);
        store_u64le(out + 64, leaf_dir_offset);
        store_u64le(out + 72, leaf_count);
        store_u64le(out + 80, internal_offset);
        store_u64le(out + 88, internal_count);
        store_u64le(out + 96, root_ref);
        store_u32le(out + 104, depth);
        store_u64le(out + 112, leaf_level_offset);
        store_u64le(out + 120, file_size);
        Fnv1a64 h;
        h.update(out, 128);
        store_u64le(out + 128, h.digest());
    }

    static IndexHeader decode(const std::uint8_t* in) {
        if (std::memcmp(in, INDEX_MAGIC, 4) != 0)
            throw FormatError("not an index file (bad magic)");
        if (load_u16le(in + 4) != INDEX_VERSION)
            throw FormatError("unsupported index version " + std::to_string(load_u16le(in + 4)));
        Fnv1a64 h;
        h.update(in, 128);
        if (h.digest() != load_u64le(in + 128))
            throw IntegrityError("index header checksum mismatch");
        if (in[6] > 1) throw FormatError("unknown index node type");

        IndexHeader hd;
        hd.node_type = static_cast<NodeType>(in[6]);
        hd.materialized = (in[7] & INDEX_FLAG_MATERIALIZED) != 0;
        hd.series_len = load_u32le(in + 8);
        hd.segment_count = load_u32le(in + 12);
        hd.bits_per_segment = load_u32le(in + 16);
        hd.leaf_capacity = load_u32le(in + 20);
        hd.fill_factor = load_f64le(in + 24);
        hd.record_count = load_u64le(in + 32);
        hd.raw_file_hash = load_u64le(in + 40);
        hd.summary_offset = load_u64le(in + 48);
        hd.leaf_region_offset = load_u64le(in + 56);
        hd.leaf_dir_offset = load_u64le(in + 64);
        hd.leaf_count = load_u64le(in + 72);
        hd.internal_offset = load_u64le(in + 80);
        hd.internal_count = load_u64le(in + 88);
        hd.root_ref = load_u64le(in + 96);
        hd.depth = load_u32le(in + 104);
        hd.leaf_level_offset = load_u64le(in + 112);
        hd.file_size = load_u64le(in + 120);
        hd.config().validate();
        return hd;
    }
};

/// Leaf directory entry: where the leaf's entries live, how many there are,
/// and the leaf's first key (duplicated here so descent and locality checks
/// never touch the leaf region).
struct LeafDirEntry {
    std::uint64_t file_offset = 0;
    std::uint64_t count = 0;
    std::vector<std::uint8_t> first_key;

    void encode(std::uint8_t* out, std::size_t key_bytes) const {
        store_u64le(out, file_offset);
        store_u64le(out + 8, count);
        std::memcpy(out + 16, first_key.data(), key_bytes);
    }

    static LeafDirEntry decode(const std::uint8_t* in, std::size_t key_bytes) {
        LeafDirEntry e;
        e.file_offset = load_u64le(in);
        e.count = load_u64le(in + 8);
        e.first_key.assign(in + 16, in + 16 + key_bytes);
        return e;
    }
};

// ---------------------------------------------------------------------------
// B+-tree internal nodes: fixed 4096-byte pages. Children of one node are
// either all leaves or all internal nodes.
//
//   u16 child_count | u8 children_are_leaves | 5 zero bytes
//   child_count x ( first_key | u64 child_ref )
// ---------------------------------------------------------------------------

struct TreeNode {
    bool children_are_leaves = true;
    std::vector<std::vector<std::uint8_t>> first_keys;
    std::vector<std::uint64_t> child_refs;

    std::size_t child_count() const { return child_refs.size(); }

    static std::size_t fanout(std::size_t key_bytes) {
        return (INTERNAL_PAGE_SIZE - 8) / (key_bytes + 8);
    }

    void encode(std::uint8_t* page, std::size_t key_bytes) const {
        std::memset(page, 0, INTERNAL_PAGE_SIZE);
        store_u16le(page, static_cast<std::uint16_t>(child_count()));
        page[2] = children_are_leaves ? 1 : 0;
        std::uint8_t* p = page + 8;
        for (std::size_t i = 0; i < child_count(); ++i) {
            std::memcpy(p, first_keys[i].data(), key_bytes);
            store_u64le(p + key_bytes, child_refs[i]);
            p += key_bytes + 8;
        }
    }

    static TreeNode decode(const std::uint8_t* page, std::size_t key_bytes) {
        TreeNode n;
        std::size_t count = load_u16le(page);
        if (count > fanout(key_bytes))
            throw IntegrityError("internal node child count exceeds page fanout");
        n.children_are_leaves = page[2] != 0;
        const std::uint8_t* p = page + 8;
        for (std::size_t i = 0; i < count; ++i) {
            n.first_keys.emplace_back(p, p + key_bytes);
            n.child_refs.push_back(load_u64le(p + key_bytes));
            p += key_bytes + 8;
        }
        return n;
    }
};

// ---------------------------------------------------------------------------
// Trie internal nodes: variable-size records behind an offset table.
//
//   region layout: internal_count x u64 (record offsets, relative to the
//   region start), then the records:
//     u16 child_count | u16 zero | u32 level
//     child_count x ( u8 kind | first_key | u64 ref )
//   kind: 0 = internal node (ref = node index), 1 = leaf (ref = leaf index).
//
//   level = number of leading interleaved-key bits shared by every record
//   below the node; the node's prefix is the first `level` bits of any
//   contained key.
// ---------------------------------------------------------------------------

struct TrieChild {
    bool is_leaf = false;
    std::uint64_t ref = 0;
    std::vector<std::uint8_t> first_key;
};

struct TrieNode {
    std::uint32_t level = 0;
    std::vector<TrieChild> children;

    std::size_t encoded_size(std::size_t key_bytes) const {
        return 8 + children.size() * (9 + key_bytes);
    }

    void encode(std::uint8_t* out, std::size_t key_bytes) const {
        store_u16le(out, static_cast<std::uint16_t>(children.size()));
        store_u16le(out + 2, 0);
        store_u32le(out + 4, level);
        std::uint8_t* p = out + 8;
        for (const TrieChild& c : children) {
            p[0] = c.is_leaf ? 1 : 0;
            std::memcpy(p + 1, c.first_key.data(), key_bytes);
            store_u64le(p + 1 + key_bytes, c.ref);
            p += 9 + key_bytes;
        }
    }

    static TrieNode decode(const std::uint8_t* in, std::size_t avail, std::size_t key_bytes) {
        if (avail < 8) throw IntegrityError("truncated trie node record");
        TrieNode n;
        std::size_t count = load_u16le(in);
        n.level = load_u32le(in + 4);
        if (8 + count * (9 + key_bytes) > avail)
            throw IntegrityError("trie node record overruns its region");
        const std::uint8_t* p = in + 8;
        for (std::size_t i = 0; i < count; ++i) {
            TrieChild c;
            c.is_leaf = p[0] != 0;
            c.first_key.assign(p + 1, p + 1 + key_bytes);
            c.ref = load_u64le(p + 1 + key_bytes);
            n.children.push_back(std::move(c));
            p += 9 + key_bytes;
        }
        return n;
    }
};

/// Number of leading interleaved-key bits two keys share.
inline std::uint32_t key_lcp_bits(const std::vector<std::uint8_t>& a,
                                  const std::vector<std::uint8_t>& b,
                                  std::uint32_t max_bits) {
    std::uint32_t bits = 0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        std::uint8_t x = a[i] ^ b[i];
        if (x == 0) {
            bits += 8;
            continue;
        }
        while ((x & 0x80) == 0) {
            ++bits;
            x = static_cast<std::uint8_t>(x << 1);
        }
        break;
    }
    return std::min(bits, max_bits);
}

/// Per-segment mask of a node at interleaved level m: segment j keeps its
/// top p_j code bits, p_j = ceil((m - j) / w) for m > j, else 0.
struct SegmentMask {
    std::uint32_t prefix_len = 0;  // number of fixed leading code bits
    std::uint8_t prefix_bits = 0;  // those bits, left-aligned at bit (b-1)
};

inline std::vector<SegmentMask> segment_masks(const std::vector<std::uint8_t>& key,
                                              std::uint32_t level,
                                              std::uint32_t w, std::uint32_t b) {
    std::vector<SegmentMask> masks(w);
    for (std::uint32_t j = 0; j < w; ++j) {
        std::uint32_t p = level > j ? (level - j - 1) / w + 1 : 0;
        p = std::min(p, b);
        masks[j].prefix_len = p;
        std::uint8_t bits = 0;
        for (std::uint32_t i = 0; i < p; ++i) {
            std::uint32_t pos = i * w + j; // bit i of segment j
            std::uint8_t bit = (key[pos >> 3] >> (7 - (pos & 7))) & 1;
            bits = static_cast<std::uint8_t>(bits | (bit << (b - 1 - i)));
        }
        masks[j].prefix_bits = bits;
    }
    return masks;
}

/// True when `code` for segment j falls inside the mask's fixed prefix.
inline bool mask_matches(const SegmentMask& m, std::uint8_t code, std::uint32_t b) {
    if (m.prefix_len == 0) return true;
    std::uint8_t keep = static_cast<std::uint8_t>(0xFF << (8 - m.prefix_len));
    std::uint8_t shifted = static_cast<std::uint8_t>(code << (8 - b));
    std::uint8_t prefix = static_cast<std::uint8_t>(m.prefix_bits << (8 - b));
    return static_cast<std::uint8_t>(shifted & keep) == static_cast<std::uint8_t>(prefix & keep);
}

} // namespace coconut
