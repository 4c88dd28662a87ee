#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <filesystem>
#include <string>
#include <vector>

#include "coconut/config.hpp"
#include "coconut/error.hpp"
#include "coconut/extsort.hpp"
#include "coconut/index_format.hpp"
#include "coconut/io.hpp"
#include "coconut/raw_dataset.hpp"
#include "coconut/summarization.hpp"

namespace coconut {

struct BuildOptions {
    EngineConfig config;
    NodeType node_type = NodeType::tree;
    bool materialize = false;
    std::filesystem::path temp_dir; // empty: $COCONUT_TMPDIR or system default
    std::string job_tag = "coconut-build";
};

struct BuildReport {
    std::uint64_t record_count = 0;
    std::uint64_t leaf_count = 0;
    std::uint64_t internal_count = 0;
    std::uint32_t depth = 0;
    double mean_leaf_utilization = 0.0;       // over all leaves
    double mean_leaf_utilization_full = 0.0;  // excluding the final (short) leaf
    std::uint64_t runs_created = 0;
    std::uint32_t merge_levels = 0;
    std::uint64_t index_file_size = 0;
    IoCounters raw_io;   // single sequential pass over the raw file
    IoCounters sort_io;  // run files only
    IoCounters index_io; // index file writes
    double wall_ms = 0.0;
};

namespace detail {

/// Groups `count` children into nodes of at most `fanout`, stealing one child
/// for the tail group when it would otherwise hold a single child. Returns
/// group sizes.
inline std::vector<std::size_t> balanced_groups(std::size_t count, std::size_t fanout) {
    std::vector<std::size_t> sizes;
    std::size_t left = count;
    while (left > 0) {
        std::size_t take = std::min(left, fanout);
        sizes.push_back(take);
        left -= take;
    }
    if (sizes.size() >= 2 && sizes.back() == 1) {
        sizes[sizes.size() - 2] -= 1;
        sizes.back() = 2;
    }
    return sizes;
}

/// Bottom-up B+-tree over the leaf directory: level by level until one root.
/// Nodes are appended to `nodes` lowest level first; returns (root_ref, depth).
inline std::pair<std::uint64_t, std::uint32_t> build_tree_levels(
    const std::vector<LeafDirEntry>& leaves, std::size_t key_bytes,
    std::vector<TreeNode>& nodes) {
    if (leaves.size() <= 1) return {0, 0};

    struct Item {
        std::vector<std::uint8_t> first_key;
        std::uint64_t ref;
    };
    std::vector<Item> level;
    level.reserve(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i)
        level.push_back({leaves[i].first_key, i});

    const std::size_t fanout = TreeNode::fanout(key_bytes);
    bool leaves_below = true;
    std::uint32_t depth = 0;
    while (true) {
        std::vector<Item> next;
        std::size_t pos = 0;
        for (std::size_t take : balanced_groups(level.size(), fanout)) {
            TreeNode n;
            n.children_are_leaves = leaves_below;
            for (std::size_t i = 0; i < take; ++i) {
                n.first_keys.push_back(level[pos + i].first_key);
                n.child_refs.push_back(level[pos + i].ref);
            }
            pos += take;
            next.push_back({n.first_keys.front(), nodes.size()});
            nodes.push_back(std::move(n));
        }
        ++depth;
        leaves_below = false;
        if (next.size() == 1) return {next.front().ref, depth};
        level = std::move(next);
    }
}

// ---------------------------------------------------------------------------
// Trie shape construction. Input leaves arrive in sorted key order; the tree
// of shared-prefix nodes grows along its right spine. A node's level is the
// number of leading interleaved-key bits shared by everything below it.
// ---------------------------------------------------------------------------

struct TrieLeaf {
    std::uint64_t start_rank = 0;
    std::uint64_t count = 0;
    std::vector<std::uint8_t> first_key;
    std::vector<std::uint8_t> last_key;
};

struct TrieShapeNode {
    std::uint32_t level = 0;
    struct Child {
        TrieShapeNode* node = nullptr;
        TrieLeaf* leaf = nullptr;
    };
    std::vector<Child> children;
};

class TrieBuilder {
public:
    explicit TrieBuilder(const EngineConfig& cfg)
        : max_bits_(static_cast<std::uint32_t>(cfg.segment_count * cfg.bits_per_segment)),
          leaf_capacity_(cfg.leaf_capacity) {}

    /// Append the next leaf (keys strictly greater than everything before it,
    /// except that equal-key runs arrive as one leaf).
    void insert_bottom_up(TrieLeaf leaf) {
        TrieLeaf* stored = &leaves_.emplace_back(std::move(leaf));
        if (!root_) {
            root_ = new_node(0);
            spine_ = {root_};
        } else {
            if (std::lexicographical_compare(stored->first_key.begin(), stored->first_key.end(),
                                             prev_last_key_.begin(), prev_last_key_.end()))
                throw IntegrityError("trie input is not in sorted key order");
            create_up_tree(key_lcp_bits(prev_last_key_, stored->first_key, max_bits_));
        }
        spine_.back()->children.push_back({nullptr, stored});
        prev_last_key_ = stored->last_key;
    }

    /// Adjust the right spine so its top is the node that owns the next
    /// subtree at prefix depth `level`, splitting a new ancestor off the
    /// spine when no node at that level exists yet.
    void create_up_tree(std::uint32_t level) {
        while (spine_.back()->level > level) spine_.pop_back();
        TrieShapeNode* top = spine_.back();
        if (top->level == level) return;
        // top->level < level: the previous subtree and the incoming one share
        // a deeper prefix; wrap the previous subtree in a new node.
        TrieShapeNode* mid = new_node(level);
        mid->children.push_back(top->children.back());
        top->children.back() = {mid, nullptr};
        spine_.push_back(mid);
    }

    /// One compaction pass under `node`: merge runs of adjacent leaf children
    /// whose combined size fits a leaf, and splice out child nodes left with
    /// a single leaf. Returns true when anything changed.
    bool compact_subtree(TrieShapeNode* node) {
        bool changed = false;
        for (auto& c : node->children)
            if (c.node && compact_subtree(c.node)) changed = true;

        std::vector<TrieShapeNode::Child> out;
        out.reserve(node->children.size());
        std::size_t i = 0;
        while (i < node->children.size()) {
            auto& c = node->children[i];
            if (!c.leaf) {
                if (c.node->children.size() == 1 && c.node->children[0].leaf) {
                    out.push_back(c.node->children[0]); // absorb single-leaf node
                    changed = true;
                } else {
                    out.push_back(c);
                }
                ++i;
                continue;
            }
            // greedy run of adjacent leaves
            std::size_t j = i + 1;
            std::uint64_t total = c.leaf->count;
            while (j < node->children.size() && node->children[j].leaf &&
                   total + node->children[j].leaf->count <= leaf_capacity_) {
                total += node->children[j].leaf->count;
                ++j;
            }
            if (j - i > 1) {
                TrieLeaf merged;
                merged.start_rank = c.leaf->start_rank;
                merged.count = total;
                merged.first_key = c.leaf->first_key;
                merged.last_key = node->children[j - 1].leaf->last_key;
                out.push_back({nullptr, &leaves_.emplace_back(std::move(merged))});
                changed = true;
            } else {
                out.push_back(c);
            }
            i = j;
        }
        node->children.swap(out);
        return changed;
    }

    /// Close construction and compact to fixpoint. Returns the root (null
    /// when no leaf was ever inserted).
    TrieShapeNode* finish() {
        if (!root_) return nullptr;
        while (compact_subtree(root_)) {
        }
        return root_;
    }

private:
    TrieShapeNode* new_node(std::uint32_t level) {
        nodes_.emplace_back();
        nodes_.back().level = level;
        return &nodes_.back();
    }

    std::uint32_t max_bits_;
    std::uint64_t leaf_capacity_;
    std::deque<TrieShapeNode> nodes_;  // stable addresses
    std::deque<TrieLeaf> leaves_;
    std::vector<TrieShapeNode*> spine_;
    TrieShapeNode* root_ = nullptr;
    std::vector<std::uint8_t> prev_last_key_;
};

/// Flatten a compacted trie: leaves in left-to-right order, nodes in preorder.
struct FlatTrie {
    std::vector<TrieLeaf> leaves;
    std::vector<TrieNode> nodes;
    std::uint64_t root_ref = 0;
    std::uint32_t depth = 0;
};

inline void flatten_trie_node(const TrieShapeNode* node, FlatTrie& out,
                              std::uint64_t my_index, std::uint32_t depth) {
    out.depth = std::max(out.depth, depth);
    TrieNode rec;
    rec.level = node->level;
    for (const auto& c : node->children) {
        TrieChild tc;
        if (c.leaf) {
            tc.is_leaf = true;
            tc.ref = out.leaves.size();
            tc.first_key = c.leaf->first_key;
            out.leaves.push_back(*c.leaf);
        } else {
            tc.is_leaf = false;
            const std::uint64_t child_index = out.nodes.size(); // preorder slot
            tc.ref = child_index;
            out.nodes.emplace_back();
            flatten_trie_node(c.node, out, child_index, depth + 1);
            tc.first_key = out.nodes[child_index].children.front().first_key;
        }
        rec.children.push_back(std::move(tc));
    }
    out.nodes[my_index] = std::move(rec);
}

inline FlatTrie flatten_trie(const TrieShapeNode* root) {
    FlatTrie out;
    if (!root) return out;
    if (root->children.size() == 1 && root->children[0].leaf) {
        out.leaves.push_back(*root->children[0].leaf); // single-leaf index
        return out;
    }
    out.nodes.emplace_back();
    out.root_ref = 0;
    flatten_trie_node(root, out, 0, 1);
    return out;
}

} // namespace detail

/// Build an index file from a raw series file: one sequential scan
/// (summarize + hash), an external sort of the records, and a streaming
/// write of the sorted regions, then the node structure on top.
inline BuildReport build_index(const std::filesystem::path& raw_path,
                               const std::filesystem::path& index_path,
                               const BuildOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const EngineConfig& cfg = opt.config;
    cfg.validate();

    const std::uint64_t n_records = raw_series_count(raw_path, cfg.series_len);
    const std::size_t kb = cfg.key_bytes();
    const std::size_t series_bytes = cfg.series_bytes();
    const RecordLayout layout{kb, opt.materialize ? series_bytes : 0};

    IndexHeader hd;
    hd.node_type = opt.node_type;
    hd.materialized = opt.materialize;
    hd.series_len = static_cast<std::uint32_t>(cfg.series_len);
    hd.segment_count = static_cast<std::uint32_t>(cfg.segment_count);
    hd.bits_per_segment = static_cast<std::uint32_t>(cfg.bits_per_segment);
    hd.leaf_capacity = static_cast<std::uint32_t>(cfg.leaf_capacity);
    hd.fill_factor = cfg.fill_factor;
    hd.record_count = n_records;
    hd.summary_offset = INDEX_HEADER_SIZE;
    const std::uint64_t summary_end = hd.summary_offset + n_records * hd.summary_entry_size();
    hd.leaf_region_offset = opt.materialize ? summary_end : hd.summary_offset;
    hd.leaf_dir_offset = opt.materialize
                             ? hd.leaf_region_offset + n_records * hd.leaf_entry_size()
                             : summary_end;

    BuildReport report;
    report.record_count = n_records;

    // Pass 1 feeds the sorter: read each series, hash its bytes, summarize.
    CountingFile raw(raw_path, "rb", &report.raw_io);
    Summarizer summarizer(cfg);
    Fnv1a64 raw_hash;
    std::vector<std::uint8_t> series_buf(series_bytes);
    std::vector<double> values(cfg.series_len);
    std::uint64_t next_record = 0;
    RecordSource source = [&](std::uint8_t* out) {
        if (next_record == n_records) return false;
        raw.read(series_buf.data(), series_bytes);
        raw_hash.update(series_buf.data(), series_bytes);
        for (std::size_t i = 0; i < cfg.series_len; ++i)
            values[i] = load_f32le(series_buf.data() + 4 * i);
        summarizer.key_into(values, out);
        store_u64le(out + kb, next_record * series_bytes);
        if (opt.materialize) std::memcpy(out + kb + 8, series_buf.data(), series_bytes);
        ++next_record;
        return true;
    };

    // The index file is written through two handles: one streams the summary
    // array, the other streams the (materialized) leaf region further up the
    // file. Regions never overlap.
    CountingFile main_out(index_path, "wb", &report.index_io);
    {
        std::uint8_t zero_header[INDEX_HEADER_SIZE] = {};
        main_out.write(zero_header, sizeof zero_header);
        main_out.flush();
    }
    CountingFile leaf_out;
    if (opt.materialize) {
        leaf_out = CountingFile(index_path, "r+b", &report.index_io);
        leaf_out.seek(hd.leaf_region_offset);
    }

    // Leaf packing state shared by the sinks.
    std::vector<LeafDirEntry> dir;
    std::vector<std::uint32_t> leaf_levels; // trie only
    const std::uint64_t tree_target = static_cast<std::uint64_t>(
        std::ceil(cfg.fill_factor * static_cast<double>(cfg.leaf_capacity)));
    detail::TrieBuilder trie(cfg);
    std::uint64_t rank = 0;
    std::uint64_t open_start = 0; // first rank of the leaf being filled
    std::vector<std::uint8_t> open_first_key, prev_key;

    auto leaf_file_offset = [&](std::uint64_t start_rank) {
        return hd.leaf_region_offset + start_rank * hd.leaf_entry_size();
    };
    auto close_tree_leaf = [&](std::uint64_t end_rank) {
        LeafDirEntry e;
        e.file_offset = leaf_file_offset(open_start);
        e.count = end_rank - open_start;
        e.first_key = open_first_key;
        dir.push_back(std::move(e));
    };
    auto close_trie_leaf = [&](std::uint64_t end_rank) {
        detail::TrieLeaf leaf;
        leaf.start_rank = open_start;
        leaf.count = end_rank - open_start;
        leaf.first_key = open_first_key;
        leaf.last_key = prev_key;
        trie.insert_bottom_up(std::move(leaf));
    };

    RecordSink sink = [&](const std::uint8_t* rec) {
        std::vector<std::uint8_t> key(rec, rec + kb);
        if (rank == 0) {
            open_first_key = key;
        } else if (opt.node_type == NodeType::tree) {
            if (rank - open_start == tree_target) {
                close_tree_leaf(rank);
                open_start = rank;
                open_first_key = key;
            }
        } else {
            if (key != prev_key) { // new equal-key run
                close_trie_leaf(rank);
                open_start = rank;
                open_first_key = key;
            }
        }
        prev_key = std::move(key);
        main_out.write(rec, hd.summary_entry_size());
        if (opt.materialize) leaf_out.write(rec, hd.leaf_entry_size());
        ++rank;
    };

    ExternalSorter sorter(layout, cfg.memory_budget,
                          opt.temp_dir.empty() ? default_temp_dir() : opt.temp_dir,
                          opt.job_tag);
    sorter.sort(source, sink);
    raw.close();
    if (opt.materialize) leaf_out.close();
    report.sort_io = sorter.counters();
    report.runs_created = sorter.runs_created();
    report.merge_levels = sorter.merge_levels();
    hd.raw_file_hash = raw_hash.digest();

    // Close the final open leaf and build the node structure.
    std::vector<TreeNode> tree_nodes;
    std::vector<std::uint8_t> trie_region;
    if (opt.node_type == NodeType::tree) {
        if (rank > open_start) close_tree_leaf(rank);
        auto [root, depth] = detail::build_tree_levels(dir, kb, tree_nodes);
        hd.root_ref = root;
        hd.depth = depth;
        hd.internal_count = tree_nodes.size();
    } else {
        if (rank > open_start) close_trie_leaf(rank);
        detail::FlatTrie flat = detail::flatten_trie(trie.finish());
        for (const auto& leaf : flat.leaves) {
            LeafDirEntry e;
            e.file_offset = leaf_file_offset(leaf.start_rank);
            e.count = leaf.count;
            e.first_key = leaf.first_key;
            dir.push_back(std::move(e));
            leaf_levels.push_back(key_lcp_bits(
                leaf.first_key, leaf.last_key,
                static_cast<std::uint32_t>(cfg.segment_count * cfg.bits_per_segment)));
        }
        hd.root_ref = flat.root_ref;
        hd.depth = flat.depth;
        hd.internal_count = flat.nodes.size();

        // serialize node records behind their offset table
        std::vector<std::uint8_t> table(8 * flat.nodes.size());
        std::vector<std::uint8_t> body;
        for (std::size_t i = 0; i < flat.nodes.size(); ++i) {
            store_u64le(table.data() + 8 * i, table.size() + body.size());
            std::size_t at = body.size();
            body.resize(at + flat.nodes[i].encoded_size(kb));
            flat.nodes[i].encode(body.data() + at, kb);
        }
        trie_region = std::move(table);
        trie_region.insert(trie_region.end(), body.begin(), body.end());
    }
    hd.leaf_count = dir.size();

    // Leaf directory.
    std::vector<std::uint8_t> dir_bytes(dir.size() * hd.dir_entry_size());
    for (std::size_t i = 0; i < dir.size(); ++i)
        dir[i].encode(dir_bytes.data() + i * hd.dir_entry_size(), kb);
    main_out.seek(hd.leaf_dir_offset);
    if (!dir_bytes.empty()) main_out.write(dir_bytes.data(), dir_bytes.size());
    hd.internal_offset = hd.leaf_dir_offset + dir_bytes.size();

    // Internal region.
    if (opt.node_type == NodeType::tree) {
        std::vector<std::uint8_t> page(INTERNAL_PAGE_SIZE);
        for (const TreeNode& n : tree_nodes) {
            n.encode(page.data(), kb);
            main_out.write(page.data(), page.size());
        }
        hd.leaf_level_offset = 0;
        hd.file_size = hd.internal_offset + tree_nodes.size() * INTERNAL_PAGE_SIZE;
    } else {
        if (!trie_region.empty()) main_out.write(trie_region.data(), trie_region.size());
        hd.leaf_level_offset = hd.internal_offset + trie_region.size();
        std::vector<std::uint8_t> levels(4 * leaf_levels.size());
        for (std::size_t i = 0; i < leaf_levels.size(); ++i)
            store_u32le(levels.data() + 4 * i, leaf_levels[i]);
        if (!levels.empty()) main_out.write(levels.data(), levels.size());
        hd.file_size = hd.leaf_level_offset + levels.size();
    }

    std::uint8_t header_bytes[INDEX_HEADER_SIZE];
    hd.encode(header_bytes);
    main_out.write_at(0, header_bytes, sizeof header_bytes);
    main_out.close();

    report.leaf_count = hd.leaf_count;
    report.internal_count = hd.internal_count;
    report.depth = hd.depth;
    report.index_file_size = hd.file_size;
    double util_sum = 0.0;
    for (const auto& e : dir) util_sum += double(e.count) / double(cfg.leaf_capacity);
    report.mean_leaf_utilization = dir.empty() ? 0.0 : util_sum / double(dir.size());
    if (dir.size() > 1) {
        double full_sum = util_sum - double(dir.back().count) / double(cfg.leaf_capacity);
        report.mean_leaf_utilization_full = full_sum / double(dir.size() - 1);
    } else {
        report.mean_leaf_utilization_full = report.mean_leaf_utilization;
    }
    report.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return report;
}

} // namespace coconut
