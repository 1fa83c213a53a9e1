#pragma once

#include <map>
#include <string>
#include <vector>

namespace rwom {

struct MatchingBlock {
    std::size_t a_pos = 0;
    std::size_t b_pos = 0;
    std::size_t size = 0;
};

namespace detail {

// Longest matching block in a[alo, ahi) x b[blo, bhi); ties resolved by the
// earliest start in a, then the earliest start in b.
inline MatchingBlock find_longest_match(const std::string& a, std::size_t alo, std::size_t ahi,
                                        const std::string& b, std::size_t blo, std::size_t bhi) {
    std::map<char, std::vector<std::size_t>> b2j;
    for (std::size_t j = blo; j < bhi; ++j) b2j[b[j]].push_back(j);

    MatchingBlock best{alo, blo, 0};
    std::map<std::size_t, std::size_t> j2len;
    for (std::size_t i = alo; i < ahi; ++i) {
        std::map<std::size_t, std::size_t> new_j2len;
        auto it = b2j.find(a[i]);
        if (it != b2j.end()) {
            for (std::size_t j : it->second) {
                std::size_t k = 1;
                if (j > blo) {
                    auto prev = j2len.find(j - 1);
                    if (prev != j2len.end()) k = prev->second + 1;
                }
                new_j2len[j] = k;
                if (k > best.size) {
                    best = {i + 1 - k, j + 1 - k, k};
                }
            }
        }
        j2len = std::move(new_j2len);
    }
    return best;
}

inline void matching_blocks(const std::string& a, std::size_t alo, std::size_t ahi,
                            const std::string& b, std::size_t blo, std::size_t bhi,
                            std::vector<MatchingBlock>& out) {
    MatchingBlock m = find_longest_match(a, alo, ahi, b, blo, bhi);
    if (m.size == 0) return;
    matching_blocks(a, alo, m.a_pos, b, blo, m.b_pos, out);
    out.push_back(m);
    matching_blocks(a, m.a_pos + m.size, ahi, b, m.b_pos + m.size, bhi, out);
}

}  // namespace detail

// Gestalt pattern matching: 2*M / (|a| + |b|) where M is the total size of
// the recursive longest-matching-block decomposition. 1.0 for identical
// strings (including both empty), 0.0 for disjoint alphabets.
inline double similarity(const std::string& a, const std::string& b) {
    const std::size_t length = a.size() + b.size();
    if (length == 0) return 1.0;
    std::vector<MatchingBlock> blocks;
    detail::matching_blocks(a, 0, a.size(), b, 0, b.size(), blocks);
    std::size_t matched = 0;
    for (const auto& block : blocks) matched += block.size;
    return 2.0 * static_cast<double>(matched) / static_cast<double>(length);
}

}  // namespace rwom
