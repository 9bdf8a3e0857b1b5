#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace sdscan {

/// Exact match of `length` bases at s1[pos1..] and s2[pos2..].
struct Anchor {
    std::uint64_t pos1 = 0;
    std::uint64_t pos2 = 0;
    std::uint64_t length = 0;

    std::uint64_t end1() const { return pos1 + length; }
    std::uint64_t end2() const { return pos2 + length; }

    friend bool operator==(const Anchor&, const Anchor&) = default;
    friend auto operator<=>(const Anchor&, const Anchor&) = default;
};

enum class ChainTier { initial, refined };

struct Chain {
    std::vector<Anchor> anchors;
    /// Chain score in thousandths of a scoring unit.
    std::int64_t score = 0;
    std::uint64_t begin1 = 0, end1 = 0;
    std::uint64_t begin2 = 0, end2 = 0;
    ChainTier tier = ChainTier::initial;

    std::uint64_t span1() const { return end1 - begin1; }
    std::uint64_t span2() const { return end2 - begin2; }
};

/// Scoring constants. Internally everything is converted to integer
/// thousandths so that the optimised and the reference DP agree exactly.
struct ChainScoring {
    double anchor_per_bp = 1.0;
    double initial_gap_per_bp = 0.01;
    double refined_gap_open = 100.0;
    double refined_gap_per_bp = 0.05;
    std::uint64_t refined_gap_cap = 10'000;
    /// A chain may start this many bases inside its refined-tier predecessor;
    /// the later chain loses that prefix when the two are joined.
    std::uint64_t refined_overlap = 10;
};

/// Integer form of a gap model: a link a -> b with gaps g1 = b.pos1 - a.end1
/// and g2 = b.pos2 - a.end2 is allowed when max(g1, g2) <= cap and costs
/// open + per_bp * (g1 + g2).
struct GapModel {
    std::int64_t anchor_per_bp = 1000;
    std::int64_t open = 0;
    std::int64_t per_bp = 10;
    std::uint64_t cap = 0;
};

std::int64_t to_milli(double v);
GapModel initial_gap_model(const ChainScoring& s, std::uint64_t cap);
GapModel refined_gap_model(const ChainScoring& s);

struct AnchorOptions {
    int k = 11;
    /// k-mers occurring more often than this in s1 are not used as seeds.
    std::size_t max_occurrences = 1000;
    /// Matches on this diagonal (pos1 - pos2) are ignored.
    std::optional<std::int64_t> excluded_diagonal;
};

/// Maximal exact matches of length >= k found by probing k-mers of s2
/// against s1 and extending each hit in both directions.
std::vector<Anchor> find_anchors(std::string_view s1, std::string_view s2, const AnchorOptions& options = {});

/// Anchors sorted by (pos1, pos2, length) with duplicates removed.
std::vector<Anchor> canonical_anchors(std::vector<Anchor> anchors);

/// Best chain score f(b) for every anchor of `anchors` (canonical order
/// required), with predecessor links; -1 marks a chain start.
struct ChainDp {
    std::vector<std::int64_t> score;
    std::vector<std::int64_t> pred;
};
ChainDp chain_scores(const std::vector<Anchor>& anchors, const std::vector<std::int64_t>& weights,
                     const GapModel& gaps);

/// Sparse chaining in O(n log n). Returns maximal chains in order of
/// decreasing score; every anchor belongs to at most one chain.
std::vector<Chain> sparse_chain(std::vector<Anchor> anchors, const GapModel& gaps);

/// Splits a chain wherever the gap to the next anchor exceeds
/// delta_g * max(1000, running span of the current piece).
std::vector<Chain> split_by_span(const Chain& chain, double delta_g, const GapModel& gaps);

/// Initial-tier chaining of one region pair: sparse_chain with cap
/// delta_g * max(1000, region length), then split_by_span.
std::vector<Chain> initial_chains(const std::vector<Anchor>& anchors, double delta_g, std::uint64_t region_length,
                                  const ChainScoring& scoring);

/// Chains initial chains as super-anchors with affine gap cost under the
/// refined cap; drops results whose longer span is below min_span.
std::vector<Chain> refine_chains(const std::vector<Chain>& initial, const ChainScoring& scoring,
                                 std::uint64_t min_span);

/// True when anchors strictly increase in both coordinates without overlap.
bool is_colinear(const Chain& chain);

} // namespace sdscan
