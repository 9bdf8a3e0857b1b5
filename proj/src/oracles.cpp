#include "sdscan/oracles.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

namespace sdscan::oracle {

namespace {

bool acgt(char c) { return c == 'A' || c == 'C' || c == 'G' || c == 'T'; }

bool has_n(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return !acgt(c); });
}

void check(bool ok, const char* what) {
    if (!ok) throw LimitError(what);
}

} // namespace

double jaccard_brute(std::string_view a, std::string_view b, int k) {
    check(a.size() <= kMaxJaccardWindow && b.size() <= kMaxJaccardWindow, "jaccard_brute: window too long");
    std::set<std::string> sa, sb;
    for (std::size_t i = 0; i + k <= a.size(); ++i)
        if (!has_n(a.substr(i, k))) sa.emplace(a.substr(i, k));
    for (std::size_t i = 0; i + k <= b.size(); ++i)
        if (!has_n(b.substr(i, k))) sb.emplace(b.substr(i, k));
    std::size_t both = 0;
    for (const auto& x : sa) both += sb.count(x);
    const std::size_t either = sa.size() + sb.size() - both;
    return either == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(either);
}

double minhash_brute(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    check(a.size() <= kMaxJaccardWindow && b.size() <= kMaxJaccardWindow, "minhash_brute: too many hashes");
    std::set<std::uint64_t> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::set<std::uint64_t> all = sa;
    all.insert(sb.begin(), sb.end());
    const std::size_t s = sa.size();
    if (s == 0) return 0.0;
    std::size_t taken = 0, shared = 0;
    for (auto h : all) {
        if (taken == s) break;
        ++taken;
        if (sa.count(h) && sb.count(h)) ++shared;
    }
    return static_cast<double>(shared) / static_cast<double>(s);
}

std::vector<std::uint64_t> winnow_brute(std::string_view bases, int k, int w,
                                        const std::function<std::uint64_t(std::string_view)>& hash) {
    check(bases.size() <= kMaxJaccardWindow, "winnow_brute: sequence too long");
    std::set<std::uint64_t> picked;
    if (bases.size() < static_cast<std::size_t>(k)) return {};
    const std::size_t kmers = bases.size() - k + 1;
    const std::size_t win = std::min<std::size_t>(w, kmers);
    for (std::size_t start = 0; start + win <= kmers; ++start) {
        bool found = false;
        std::uint64_t best = 0, where = 0;
        for (std::size_t p = start; p < start + win; ++p) {
            auto kmer = bases.substr(p, k);
            if (has_n(kmer)) continue;
            auto h = hash(kmer);
            if (!found || h <= best) {
                best = h;
                where = p;
                found = true;
            }
        }
        if (found) picked.insert(where);
    }
    return {picked.begin(), picked.end()};
}

std::int64_t chain_brute(const std::vector<BruteAnchor>& anchors, std::int64_t per_bp_weight, std::int64_t open,
                         std::int64_t per_bp, std::uint64_t cap) {
    check(anchors.size() <= kMaxChainAnchors, "chain_brute: too many anchors");
    std::vector<BruteAnchor> a = anchors;
    std::sort(a.begin(), a.end(), [](const BruteAnchor& x, const BruteAnchor& y) {
        if (x.pos1 != y.pos1) return x.pos1 < y.pos1;
        if (x.pos2 != y.pos2) return x.pos2 < y.pos2;
        return x.length < y.length;
    });
    std::vector<std::int64_t> f(a.size());
    std::int64_t best = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        f[j] = per_bp_weight * static_cast<std::int64_t>(a[j].length);
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].pos1 + a[i].length > a[j].pos1 || a[i].pos2 + a[i].length > a[j].pos2) continue;
            const auto g1 = a[j].pos1 - (a[i].pos1 + a[i].length);
            const auto g2 = a[j].pos2 - (a[i].pos2 + a[i].length);
            if (std::max(g1, g2) > cap) continue;
            const auto cand = per_bp_weight * static_cast<std::int64_t>(a[j].length) + f[i] - open -
                              per_bp * static_cast<std::int64_t>(g1 + g2);
            f[j] = std::max(f[j], cand);
        }
        best = std::max(best, f[j]);
    }
    return best;
}

BruteAlignment align_brute(std::string_view s1, std::string_view s2, int match, int mismatch, int gap_open,
                           int gap_extend) {
    check(s1.size() <= kMaxAlignLength && s2.size() <= kMaxAlignLength, "align_brute: sequence too long");
    const std::size_t n = s1.size(), m = s2.size();
    const std::int64_t neg = std::numeric_limits<std::int64_t>::min() / 4;
    using Matrix = std::vector<std::vector<std::int64_t>>;
    Matrix h(n + 1, std::vector<std::int64_t>(m + 1, neg));
    Matrix e = h; // ends with a deletion (s1 base against a gap)
    Matrix f = h; // ends with an insertion (s2 base against a gap)
    h[0][0] = 0;
    for (std::size_t i = 1; i <= n; ++i) e[i][0] = h[i][0] = -(gap_open + static_cast<std::int64_t>(i) * gap_extend);
    for (std::size_t j = 1; j <= m; ++j) f[0][j] = h[0][j] = -(gap_open + static_cast<std::int64_t>(j) * gap_extend);
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            e[i][j] = std::max(h[i - 1][j] - gap_open - gap_extend, e[i - 1][j] - gap_extend);
            f[i][j] = std::max(h[i][j - 1] - gap_open - gap_extend, f[i][j - 1] - gap_extend);
            const bool same = acgt(s1[i - 1]) && s1[i - 1] == s2[j - 1];
            h[i][j] = std::max({h[i - 1][j - 1] + (same ? match : -mismatch), e[i][j], f[i][j]});
        }
    }

    std::string ops;
    std::size_t i = n, j = m;
    char state = 'H';
    while (i > 0 || j > 0) {
        if (state == 'H') {
            if (i > 0 && j > 0) {
                const bool same = acgt(s1[i - 1]) && s1[i - 1] == s2[j - 1];
                if (h[i][j] == h[i - 1][j - 1] + (same ? match : -mismatch)) {
                    ops += 'M';
                    --i, --j;
                    continue;
                }
            }
            state = (i > 0 && h[i][j] == e[i][j]) ? 'D' : 'I';
            continue;
        }
        if (state == 'D') {
            ops += 'D';
            const bool open = j == 0 ? i == 1 : e[i][j] == h[i - 1][j] - gap_open - gap_extend;
            --i;
            if (open && j > 0) state = 'H';
            continue;
        }
        ops += 'I';
        const bool open = i == 0 ? j == 1 : f[i][j] == h[i][j - 1] - gap_open - gap_extend;
        --j;
        if (open && i > 0) state = 'H';
    }
    std::reverse(ops.begin(), ops.end());
    std::string cigar;
    for (std::size_t x = 0; x < ops.size();) {
        std::size_t y = x;
        while (y < ops.size() && ops[y] == ops[x]) ++y;
        cigar += std::to_string(y - x);
        cigar += ops[x];
        x = y;
    }
    return {h[n][m], cigar};
}

std::uint64_t qgram_brute(std::string_view a, std::string_view b, int q) {
    check(a.size() <= kMaxQgramLength && b.size() <= kMaxQgramLength, "qgram_brute: sequence too long");
    std::map<std::string, std::uint64_t> ca, cb;
    for (std::size_t i = 0; i + q <= a.size(); ++i)
        if (!has_n(a.substr(i, q))) ++ca[std::string(a.substr(i, q))];
    for (std::size_t i = 0; i + q <= b.size(); ++i)
        if (!has_n(b.substr(i, q))) ++cb[std::string(b.substr(i, q))];
    std::uint64_t total = 0;
    for (const auto& [g, c] : ca) {
        auto it = cb.find(g);
        if (it != cb.end()) total += std::min(c, it->second);
    }
    return total;
}

std::vector<BruteAnchor> mems_brute(std::string_view a, std::string_view b, int k) {
    check(a.size() <= kMaxAlignLength * 5 && b.size() <= kMaxAlignLength * 5, "mems_brute: sequence too long");
    auto eq = [&](std::size_t i, std::size_t j) { return acgt(a[i]) && a[i] == b[j]; };
    std::vector<BruteAnchor> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (i > 0 && j > 0 && eq(i - 1, j - 1)) continue;
            std::size_t len = 0;
            while (i + len < a.size() && j + len < b.size() && eq(i + len, j + len)) ++len;
            if (len >= static_cast<std::size_t>(k)) out.push_back({i, j, len});
        }
    }
    return out;
}

} // namespace sdscan::oracle
