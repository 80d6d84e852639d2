#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lumpnn/error.hpp"

namespace lumpnn {

/// A partition of {0, ..., n-1} into non-empty blocks. Blocks are kept sorted
/// by their smallest member, members ascending. Each block carries a
/// representative, which defaults to its smallest member.
class Partition {
public:
    Partition() = default;

    static Partition identity(std::size_t n) {
        std::vector<std::vector<std::size_t>> blocks(n);
        for (std::size_t i = 0; i < n; ++i) blocks[i] = {i};
        return from_blocks(n, std::move(blocks));
    }

    static Partition single_block(std::size_t n) {
        std::vector<std::vector<std::size_t>> blocks;
        if (n > 0) {
            blocks.emplace_back(n);
            for (std::size_t i = 0; i < n; ++i) blocks[0][i] = i;
        }
        return from_blocks(n, std::move(blocks));
    }

    /// Throws Error unless the blocks are non-empty, disjoint and cover [0, n).
    static Partition from_blocks(std::size_t n, std::vector<std::vector<std::size_t>> blocks) {
        Partition p;
        p.block_of_.assign(n, npos);
        for (auto& b : blocks) {
            if (b.empty()) throw Error("partition has an empty block");
            std::sort(b.begin(), b.end());
        }
        std::sort(blocks.begin(), blocks.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            for (std::size_t m : blocks[bi]) {
                if (m >= n) throw Error("partition member " + std::to_string(m) + " out of range " + std::to_string(n));
                if (p.block_of_[m] != npos) throw Error("partition member " + std::to_string(m) + " appears twice");
                p.block_of_[m] = bi;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (p.block_of_[i] == npos) throw Error("partition does not cover element " + std::to_string(i));
        }
        p.reps_.resize(blocks.size());
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) p.reps_[bi] = blocks[bi].front();
        p.blocks_ = std::move(blocks);
        return p;
    }

    /// Elements with equal labels share a block.
    static Partition from_labels(std::span<const std::size_t> labels) {
        std::size_t max_label = 0;
        for (auto l : labels) max_label = std::max(max_label, l);
        std::vector<std::vector<std::size_t>> by_label(labels.empty() ? 0 : max_label + 1);
        for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
        std::erase_if(by_label, [](const auto& b) { return b.empty(); });
        return from_blocks(labels.size(), std::move(by_label));
    }

    std::size_t size() const noexcept { return block_of_.size(); }
    std::size_t block_count() const noexcept { return blocks_.size(); }
    const std::vector<std::vector<std::size_t>>& blocks() const noexcept { return blocks_; }
    const std::vector<std::size_t>& block(std::size_t b) const { return blocks_.at(b); }
    std::size_t block_of(std::size_t i) const { return block_of_.at(i); }
    std::size_t representative(std::size_t b) const { return reps_.at(b); }

    void set_representative(std::size_t b, std::size_t member) {
        if (block_of_.at(member) != b) throw Error("representative must belong to its block");
        reps_[b] = member;
    }

    bool is_identity() const noexcept { return blocks_.size() == block_of_.size(); }

    /// True if every block of *this lies inside a block of `coarser`.
    bool refines(const Partition& coarser) const {
        if (coarser.size() != size()) return false;
        for (const auto& b : blocks_) {
            const std::size_t target = coarser.block_of(b.front());
            for (std::size_t m : b)
                if (coarser.block_of(m) != target) return false;
        }
        return true;
    }

    /// Same blocks, ignoring representatives.
    bool same_blocks(const Partition& other) const { return blocks_ == other.blocks_; }

    friend bool operator==(const Partition&, const Partition&) = default;

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::vector<std::vector<std::size_t>> blocks_;
    std::vector<std::size_t> block_of_;
    std::vector<std::size_t> reps_;
};

/// Calls fn(labels) once for every set partition of {0, ..., n-1}, encoded as a
/// restricted growth string (labels[0] = 0, labels[i] <= 1 + max(labels[0..i))).
inline void for_each_set_partition(std::size_t n, const std::function<void(std::span<const std::size_t>)>& fn) {
    if (n == 0) {
        fn({});
        return;
    }
    std::vector<std::size_t> labels(n, 0);
    std::vector<std::size_t> prefix_max(n, 0); // max of labels[0..i]
    while (true) {
        fn(labels);
        // find rightmost position that can be incremented
        std::size_t i = n - 1;
        while (i > 0 && labels[i] == prefix_max[i - 1] + 1) --i;
        if (i == 0) return;
        ++labels[i];
        prefix_max[i] = std::max(prefix_max[i - 1], labels[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            labels[j] = 0;
            prefix_max[j] = prefix_max[i];
        }
    }
}

} // namespace lumpnn
