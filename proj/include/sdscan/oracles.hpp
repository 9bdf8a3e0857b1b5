#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sdscan::oracle {

/// Raised when an oracle is handed input beyond its documented size limit.
class LimitError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kMaxJaccardWindow = 100'000;
inline constexpr std::size_t kMaxChainAnchors = 200;
inline constexpr std::size_t kMaxAlignLength = 2'000;
inline constexpr std::size_t kMaxQgramLength = 5'000;

/// Exact Jaccard similarity of the k-mer string sets of two windows.
double jaccard_brute(std::string_view a, std::string_view b, int k);

/// Winnowed MinHash estimate straight from the definition: s = |A|, the s
/// smallest members of A ∪ B, and the fraction of them found in both.
double minhash_brute(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b);

/// Minimizer positions by scanning every window in full.
std::vector<std::uint64_t> winnow_brute(std::string_view bases, int k, int w,
                                        const std::function<std::uint64_t(std::string_view)>& hash);

struct BruteAnchor {
    std::uint64_t pos1, pos2, length;
};

/// Best chain score by the quadratic DP. Anchor weight per_bp_weight * length;
/// a link with gaps g1, g2 needs max(g1, g2) <= cap and costs open + per_bp * (g1 + g2).
std::int64_t chain_brute(const std::vector<BruteAnchor>& anchors, std::int64_t per_bp_weight, std::int64_t open,
                         std::int64_t per_bp, std::uint64_t cap);

struct BruteAlignment {
    std::int64_t score;
    std::string cigar;
};

/// Textbook three-matrix Gotoh global alignment; a gap of L costs open + L * extend.
BruteAlignment align_brute(std::string_view s1, std::string_view s2, int match, int mismatch, int gap_open,
                           int gap_extend);

/// Σ_g min(count_a(g), count_b(g)) over q-grams free of N.
std::uint64_t qgram_brute(std::string_view a, std::string_view b, int q);

/// All maximal exact matches of length >= k between a and b.
std::vector<BruteAnchor> mems_brute(std::string_view a, std::string_view b, int k);

} // namespace sdscan::oracle
