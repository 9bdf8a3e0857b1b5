#include "sdscan/chain.hpp"

#include "sdscan/dna.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace sdscan {

std::int64_t to_milli(double v) { return std::llround(v * 1000.0); }

GapModel initial_gap_model(const ChainScoring& s, std::uint64_t cap) {
    return {to_milli(s.anchor_per_bp), 0, to_milli(s.initial_gap_per_bp), cap};
}

GapModel refined_gap_model(const ChainScoring& s) {
    return {to_milli(s.anchor_per_bp), to_milli(s.refined_gap_open), to_milli(s.refined_gap_per_bp),
            s.refined_gap_cap};
}

std::vector<Anchor> find_anchors(std::string_view s1, std::string_view s2, const AnchorOptions& options) {
    const int k = options.k;
    if (k < 1 || k > 31) throw std::invalid_argument("anchor k must be in [1, 31]");
    std::vector<Anchor> out;
    if (s1.size() < static_cast<std::size_t>(k) || s2.size() < static_cast<std::size_t>(k)) return out;
    const std::uint64_t mask = (1ULL << (2 * k)) - 1;

    struct Entry {
        std::uint64_t code, pos;
    };
    std::vector<Entry> table;
    table.reserve(s1.size());
    {
        std::uint64_t packed = 0;
        int run = 0;
        for (std::size_t i = 0; i < s1.size(); ++i) {
            auto c = base_code(s1[i]);
            if (c == kBaseN) {
                run = 0;
                continue;
            }
            packed = ((packed << 2) | c) & mask;
            if (++run >= k) table.push_back({packed, i + 1 - k});
        }
    }
    std::sort(table.begin(), table.end(),
              [](const Entry& a, const Entry& b) { return a.code != b.code ? a.code < b.code : a.pos < b.pos; });

    auto same = [&](std::uint64_t a, std::uint64_t b) {
        auto c = base_code(s1[a]);
        return c != kBaseN && c == base_code(s2[b]);
    };

    // Per diagonal, the s2 end of the last reported match.
    std::unordered_map<std::int64_t, std::uint64_t> covered;
    std::uint64_t packed = 0;
    int run = 0;
    for (std::size_t i = 0; i < s2.size(); ++i) {
        auto c = base_code(s2[i]);
        if (c == kBaseN) {
            run = 0;
            continue;
        }
        packed = ((packed << 2) | c) & mask;
        if (++run < k) continue;
        const std::uint64_t p2 = i + 1 - k;
        auto lo = std::lower_bound(table.begin(), table.end(), packed,
                                   [](const Entry& e, std::uint64_t v) { return e.code < v; });
        auto hi = lo;
        while (hi != table.end() && hi->code == packed) ++hi;
        if (static_cast<std::size_t>(hi - lo) > options.max_occurrences) continue;
        for (auto it = lo; it != hi; ++it) {
            const std::uint64_t p1 = it->pos;
            const auto diag = static_cast<std::int64_t>(p1) - static_cast<std::int64_t>(p2);
            if (options.excluded_diagonal && *options.excluded_diagonal == diag) continue;
            auto cov = covered.find(diag);
            if (cov != covered.end() && cov->second > p2) continue;
            std::uint64_t b1 = p1, b2 = p2;
            while (b1 > 0 && b2 > 0 && same(b1 - 1, b2 - 1)) --b1, --b2;
            std::uint64_t e1 = p1 + k, e2 = p2 + k;
            while (e1 < s1.size() && e2 < s2.size() && same(e1, e2)) ++e1, ++e2;
            out.push_back({b1, b2, e1 - b1});
            covered[diag] = e2;
        }
    }
    return canonical_anchors(std::move(out));
}

std::vector<Anchor> canonical_anchors(std::vector<Anchor> anchors) {
    std::sort(anchors.begin(), anchors.end());
    anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
    return anchors;
}

namespace {

constexpr std::int64_t kNone = std::numeric_limits<std::int64_t>::min();

/// Point-assign, range-max segment tree; ties resolve to the smaller payload.
class MaxTree {
  public:
    explicit MaxTree(std::size_t n) : size_(1) {
        while (size_ < std::max<std::size_t>(n, 1)) size_ <<= 1;
        tree_.assign(2 * size_, {kNone, -1});
    }

    void set(std::size_t i, std::int64_t value, std::int64_t payload) {
        i += size_;
        tree_[i] = {value, payload};
        for (i >>= 1; i > 0; i >>= 1) tree_[i] = better(tree_[2 * i], tree_[2 * i + 1]);
    }

    /// Max over leaves [lo, hi).
    std::pair<std::int64_t, std::int64_t> query(std::size_t lo, std::size_t hi) const {
        std::pair<std::int64_t, std::int64_t> best{kNone, -1};
        for (lo += size_, hi += size_; lo < hi; lo >>= 1, hi >>= 1) {
            if (lo & 1) best = better(best, tree_[lo++]);
            if (hi & 1) best = better(best, tree_[--hi]);
        }
        return best;
    }

  private:
    static std::pair<std::int64_t, std::int64_t> better(const std::pair<std::int64_t, std::int64_t>& a,
                                                        const std::pair<std::int64_t, std::int64_t>& b) {
        if (a.first != b.first) return a.first > b.first ? a : b;
        if (a.second < 0) return b;
        if (b.second < 0) return a;
        return a.second < b.second ? a : b;
    }

    std::size_t size_;
    std::vector<std::pair<std::int64_t, std::int64_t>> tree_;
};

Chain make_chain(std::vector<Anchor> anchors, std::int64_t score, ChainTier tier) {
    Chain c;
    c.begin1 = anchors.front().pos1;
    c.begin2 = anchors.front().pos2;
    c.end1 = anchors.back().end1();
    c.end2 = anchors.back().end2();
    c.anchors = std::move(anchors);
    c.score = score;
    c.tier = tier;
    return c;
}

std::int64_t link_cost(const GapModel& gaps, std::uint64_t g1, std::uint64_t g2) {
    return gaps.open + gaps.per_bp * static_cast<std::int64_t>(g1 + g2);
}

/// Greedy extraction of disjoint chains by descending end score. Nodes in the
/// same group are used up together.
std::vector<std::vector<std::size_t>> extract(const ChainDp& dp, std::vector<std::int64_t>& scores,
                                              const std::vector<std::int64_t>& weights,
                                              const std::vector<std::size_t>* group = nullptr) {
    const std::size_t n = dp.score.size();
    auto id = [&](std::int64_t x) { return group ? (*group)[x] : static_cast<std::size_t>(x); };
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dp.score[a] > dp.score[b]; });
    std::size_t groups = n;
    if (group)
        for (auto g : *group) groups = std::max(groups, g + 1);
    std::vector<char> used(groups, 0);
    std::vector<std::vector<std::size_t>> chains;
    for (auto end : order) {
        if (used[id(end)]) continue;
        std::vector<std::size_t> path;
        auto cur = static_cast<std::int64_t>(end);
        while (cur >= 0 && !used[id(cur)]) {
            path.push_back(static_cast<std::size_t>(cur));
            used[id(cur)] = 1;
            cur = dp.pred[cur];
        }
        std::reverse(path.begin(), path.end());
        const auto first = path.front();
        scores.push_back(dp.score[end] - dp.score[first] + weights[first]);
        chains.push_back(std::move(path));
    }
    std::vector<std::size_t> rank(chains.size());
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::vector<std::size_t>> sorted_chains;
    std::vector<std::int64_t> sorted_scores;
    for (auto r : rank) {
        sorted_chains.push_back(std::move(chains[r]));
        sorted_scores.push_back(scores[r]);
    }
    scores = std::move(sorted_scores);
    return sorted_chains;
}

struct Box {
    std::uint64_t pos1, pos2, end1, end2;
};

/// Sweep over boxes sorted by start; predecessors are activated once their
/// end1 is behind the current start and retired once further than the cap.
ChainDp chain_boxes(const std::vector<Box>& boxes, const std::vector<std::int64_t>& weights, const GapModel& gaps) {
    const std::size_t n = boxes.size();
    ChainDp dp{std::vector<std::int64_t>(n, 0), std::vector<std::int64_t>(n, -1)};
    if (n == 0) return dp;

    std::vector<std::size_t> by_end2(n);
    std::iota(by_end2.begin(), by_end2.end(), 0);
    std::sort(by_end2.begin(), by_end2.end(), [&](std::size_t a, std::size_t b) {
        return boxes[a].end2 != boxes[b].end2 ? boxes[a].end2 < boxes[b].end2 : a < b;
    });
    std::vector<std::size_t> leaf(n);
    std::vector<std::uint64_t> leaf_end2(n);
    for (std::size_t x = 0; x < n; ++x) {
        leaf[by_end2[x]] = x;
        leaf_end2[x] = boxes[by_end2[x]].end2;
    }
    std::vector<std::size_t> by_end1(n);
    std::iota(by_end1.begin(), by_end1.end(), 0);
    std::sort(by_end1.begin(), by_end1.end(), [&](std::size_t a, std::size_t b) {
        return boxes[a].end1 != boxes[b].end1 ? boxes[a].end1 < boxes[b].end1 : a < b;
    });

    MaxTree tree(n);
    std::size_t activate = 0, deactivate = 0;
    for (std::size_t b = 0; b < n; ++b) {
        const auto& bb = boxes[b];
        while (activate < n && boxes[by_end1[activate]].end1 <= bb.pos1) {
            auto a = by_end1[activate++];
            tree.set(leaf[a], dp.score[a] + gaps.per_bp * static_cast<std::int64_t>(boxes[a].end1 + boxes[a].end2),
                     static_cast<std::int64_t>(a));
        }
        while (deactivate < activate && boxes[by_end1[deactivate]].end1 + gaps.cap < bb.pos1) {
            tree.set(leaf[by_end1[deactivate]], kNone, -1);
            ++deactivate;
        }
        dp.score[b] = weights[b];
        const std::uint64_t lo_end2 = bb.pos2 > gaps.cap ? bb.pos2 - gaps.cap : 0;
        auto lo = std::lower_bound(leaf_end2.begin(), leaf_end2.end(), lo_end2) - leaf_end2.begin();
        auto hi = std::upper_bound(leaf_end2.begin(), leaf_end2.end(), bb.pos2) - leaf_end2.begin();
        if (lo >= hi) continue;
        auto [value, a] = tree.query(static_cast<std::size_t>(lo), static_cast<std::size_t>(hi));
        if (a < 0) continue;
        const std::int64_t via = value - gaps.per_bp * static_cast<std::int64_t>(bb.pos1 + bb.pos2) - gaps.open;
        if (via > 0) {
            dp.score[b] += via;
            dp.pred[b] = a;
        }
    }
    return dp;
}

} // namespace

ChainDp chain_scores(const std::vector<Anchor>& anchors, const std::vector<std::int64_t>& weights,
                     const GapModel& gaps) {
    std::vector<Box> boxes;
    boxes.reserve(anchors.size());
    for (const auto& a : anchors) boxes.push_back({a.pos1, a.pos2, a.end1(), a.end2()});
    return chain_boxes(boxes, weights, gaps);
}

std::vector<Chain> sparse_chain(std::vector<Anchor> anchors, const GapModel& gaps) {
    anchors = canonical_anchors(std::move(anchors));
    std::vector<std::int64_t> weights(anchors.size());
    for (std::size_t x = 0; x < anchors.size(); ++x)
        weights[x] = gaps.anchor_per_bp * static_cast<std::int64_t>(anchors[x].length);
    auto dp = chain_scores(anchors, weights, gaps);
    std::vector<std::int64_t> scores;
    auto paths = extract(dp, scores, weights);
    std::vector<Chain> out;
    out.reserve(paths.size());
    for (std::size_t c = 0; c < paths.size(); ++c) {
        std::vector<Anchor> members;
        members.reserve(paths[c].size());
        for (auto x : paths[c]) members.push_back(anchors[x]);
        out.push_back(make_chain(std::move(members), scores[c], ChainTier::initial));
    }
    return out;
}

std::vector<Chain> split_by_span(const Chain& chain, double delta_g, const GapModel& gaps) {
    std::vector<Chain> out;
    if (chain.anchors.empty()) return out;
    std::vector<Anchor> piece{chain.anchors.front()};
    std::int64_t score = gaps.anchor_per_bp * static_cast<std::int64_t>(chain.anchors.front().length);
    auto flush = [&] {
        out.push_back(make_chain(std::move(piece), score, chain.tier));
        piece.clear();
    };
    for (std::size_t x = 1; x < chain.anchors.size(); ++x) {
        const auto& prev = piece.back();
        const auto& cur = chain.anchors[x];
        const auto g1 = cur.pos1 - prev.end1();
        const auto g2 = cur.pos2 - prev.end2();
        const auto span = std::max(prev.end1() - piece.front().pos1, prev.end2() - piece.front().pos2);
        const double limit = delta_g * static_cast<double>(std::max<std::uint64_t>(1000, span));
        const auto weight = gaps.anchor_per_bp * static_cast<std::int64_t>(cur.length);
        if (static_cast<double>(std::max(g1, g2)) > limit) {
            flush();
            score = weight;
        } else {
            score += weight - link_cost(gaps, g1, g2);
        }
        piece.push_back(cur);
    }
    flush();
    return out;
}

std::vector<Chain> initial_chains(const std::vector<Anchor>& anchors, double delta_g, std::uint64_t region_length,
                                  const ChainScoring& scoring) {
    const auto cap = static_cast<std::uint64_t>(
        std::floor(delta_g * static_cast<double>(std::max<std::uint64_t>(1000, region_length))));
    const auto gaps = initial_gap_model(scoring, cap);
    std::vector<Chain> out;
    for (const auto& c : sparse_chain(anchors, gaps)) {
        auto pieces = split_by_span(c, delta_g, gaps);
        out.insert(out.end(), std::make_move_iterator(pieces.begin()), std::make_move_iterator(pieces.end()));
    }
    return out;
}

std::vector<Chain> refine_chains(const std::vector<Chain>& initial, const ChainScoring& scoring,
                                 std::uint64_t min_span) {
    const auto gaps = refined_gap_model(scoring);
    // Every chain enters twice: as is, and with a short prefix removed so that
    // it may start inside the last few bases of its predecessor.
    struct Node {
        std::size_t chain;
        std::uint64_t trim;
        Box box;
    };
    std::vector<Node> nodes;
    for (std::size_t c = 0; c < initial.size(); ++c) {
        const auto& ch = initial[c];
        if (ch.anchors.empty()) continue;
        nodes.push_back({c, 0, {ch.begin1, ch.begin2, ch.end1, ch.end2}});
        const auto t = std::min(scoring.refined_overlap, ch.anchors.front().length - 1);
        if (t > 0) nodes.push_back({c, t, {ch.begin1 + t, ch.begin2 + t, ch.end1, ch.end2}});
    }
    std::stable_sort(nodes.begin(), nodes.end(), [](const Node& x, const Node& y) {
        return std::tie(x.box.pos1, x.box.pos2, x.box.end1, x.box.end2) <
               std::tie(y.box.pos1, y.box.pos2, y.box.end1, y.box.end2);
    });
    std::vector<Box> boxes;
    std::vector<std::int64_t> weights;
    std::vector<std::size_t> group;
    for (const auto& nd : nodes) {
        boxes.push_back(nd.box);
        weights.push_back(initial[nd.chain].score - static_cast<std::int64_t>(nd.trim) * gaps.anchor_per_bp);
        group.push_back(nd.chain);
    }
    auto dp = chain_boxes(boxes, weights, gaps);

    std::vector<std::int64_t> scores;
    auto paths = extract(dp, scores, weights, &group);
    std::vector<Chain> out;
    for (std::size_t c = 0; c < paths.size(); ++c) {
        std::vector<Anchor> members;
        for (auto x : paths[c]) {
            const auto& src = initial[nodes[x].chain].anchors;
            const auto first = members.size();
            members.insert(members.end(), src.begin(), src.end());
            if (x == paths[c].front()) continue;
            members[first].pos1 += nodes[x].trim;
            members[first].pos2 += nodes[x].trim;
            members[first].length -= nodes[x].trim;
        }
        const auto head = paths[c].front();
        auto chain = make_chain(std::move(members),
                                scores[c] + static_cast<std::int64_t>(nodes[head].trim) * gaps.anchor_per_bp,
                                ChainTier::refined);
        if (std::max(chain.span1(), chain.span2()) < min_span) continue;
        out.push_back(std::move(chain));
    }
    return out;
}

bool is_colinear(const Chain& chain) {
    for (std::size_t x = 1; x < chain.anchors.size(); ++x) {
        const auto& a = chain.anchors[x - 1];
        const auto& b = chain.anchors[x];
        if (b.pos1 < a.end1() || b.pos2 < a.end2() || b.pos1 <= a.pos1 || b.pos2 <= a.pos2) return false;
    }
    return true;
}

} // namespace sdscan
