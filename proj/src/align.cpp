#include "sdscan/align.hpp"

#include "sdscan/dna.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sdscan {

namespace {

constexpr std::int64_t kNegInf = std::numeric_limits<std::int64_t>::min() / 4;

// Traceback byte layout.
constexpr std::uint8_t kFromM = 0, kFromD = 1, kFromI = 2;
constexpr std::uint8_t kSourceMask = 3;
constexpr std::uint8_t kDExtend = 4;
constexpr std::uint8_t kIExtend = 8;

bool same_base(char a, char b) {
    auto x = base_code(a);
    return x != kBaseN && x == base_code(b);
}

void push_run(Cigar& c, CigarOp op, std::uint64_t n) {
    if (n == 0) return;
    if (!c.empty() && c.back().op == op)
        c.back().count += n;
    else
        c.push_back({op, n});
}

Alignment gap_only(std::string_view s1, std::string_view s2, const AlignParams& params) {
    Cigar c;
    push_run(c, CigarOp::deletion, s1.size());
    push_run(c, CigarOp::insertion, s2.size());
    return score_cigar(c, s1, s2, params);
}

struct BandResult {
    Cigar cigar;
    /// Some path leaving the band could score higher than the banded optimum.
    bool touched_edge = false;
};

/// Banded Gotoh over diagonals d = j - i in [dlo, dhi].
BandResult banded_gotoh(std::string_view s1, std::string_view s2, const AlignParams& p, std::int64_t dlo,
                        std::int64_t dhi) {
    const auto n1 = static_cast<std::int64_t>(s1.size());
    const auto n2 = static_cast<std::int64_t>(s2.size());
    const std::int64_t open = p.gap_open + p.gap_extend, ext = p.gap_extend;

    std::vector<std::int64_t> row_lo(n1 + 1), row_off(n1 + 2);
    std::uint64_t cells = 0;
    for (std::int64_t i = 0; i <= n1; ++i) {
        const auto lo = std::max<std::int64_t>(0, i + dlo);
        const auto hi = std::min<std::int64_t>(n2, i + dhi);
        row_lo[i] = lo;
        row_off[i] = static_cast<std::int64_t>(cells);
        if (hi >= lo) cells += static_cast<std::uint64_t>(hi - lo + 1);
    }
    row_off[n1 + 1] = static_cast<std::int64_t>(cells);
    if (cells > p.max_cells)
        throw ResourceError("alignment needs " + std::to_string(cells) + " cells, limit " +
                            std::to_string(p.max_cells));
    std::vector<std::uint8_t> tb(cells);
    auto row_hi = [&](std::int64_t i) { return row_lo[i] + (row_off[i + 1] - row_off[i]) - 1; };

    // Any path leaving the band passes an edge cell; its score is at most the
    // banded value there plus an all-match suffix with the forced gap bases.
    const bool lo_limits = dlo > -n1;
    const bool hi_limits = dhi < n2;
    std::int64_t edge_best = kNegInf;
    auto on_edge = [&](std::int64_t i, std::int64_t j, std::int64_t h) {
        const auto d = j - i;
        if (!((lo_limits && d == dlo) || (hi_limits && d == dhi)) || h <= kNegInf) return;
        const auto r1 = n1 - i, r2 = n2 - j;
        edge_best = std::max(edge_best, h + p.match * std::min(r1, r2) - ext * std::abs(r1 - r2));
    };

    std::vector<std::int64_t> h_prev(n2 + 2, kNegInf), d_prev(n2 + 2, kNegInf);
    std::vector<std::int64_t> h_cur(n2 + 2, kNegInf), d_cur(n2 + 2, kNegInf), i_cur(n2 + 2, kNegInf);

    // Row 0.
    {
        const auto hi = row_hi(0);
        for (std::int64_t j = 0; j <= hi; ++j) {
            auto& t = tb[row_off[0] + j];
            if (j == 0) {
                h_prev[0] = 0;
                t = kFromM;
            } else {
                h_prev[j] = -(p.gap_open + j * ext);
                t = kFromI | (j > 1 ? kIExtend : 0);
            }
            d_prev[j] = kNegInf;
            on_edge(0, j, h_prev[j]);
        }
        if (hi + 1 <= n2) h_prev[hi + 1] = d_prev[hi + 1] = kNegInf;
    }

    for (std::int64_t i = 1; i <= n1; ++i) {
        const auto lo = row_lo[i], hi = row_hi(i);
        if (lo > 0) h_cur[lo - 1] = i_cur[lo - 1] = kNegInf;
        const char a = s1[i - 1];
        for (std::int64_t j = lo; j <= hi; ++j) {
            std::uint8_t t = 0;
            if (j == 0) {
                d_cur[0] = -(p.gap_open + i * ext);
                h_cur[0] = d_cur[0];
                i_cur[0] = kNegInf;
                tb[row_off[i]] = kFromD | (i > 1 ? kDExtend : 0);
                on_edge(i, 0, h_cur[0]);
                continue;
            }
            // D: gap in the query, consumes s1.
            const auto d_open = h_prev[j] - open;
            const auto d_ext = d_prev[j] - ext;
            std::int64_t d;
            if (d_ext > d_open) {
                d = d_ext;
                t |= kDExtend;
            } else {
                d = d_open;
            }
            // I: gap in the reference, consumes s2.
            const auto i_open = h_cur[j - 1] - open;
            const auto i_ext = i_cur[j - 1] - ext;
            std::int64_t ins;
            if (i_ext > i_open) {
                ins = i_ext;
                t |= kIExtend;
            } else {
                ins = i_open;
            }
            const auto diag = h_prev[j - 1];
            const std::int64_t m = diag <= kNegInf ? kNegInf : diag + (same_base(a, s2[j - 1]) ? p.match : -p.mismatch);
            std::int64_t h = m;
            std::uint8_t src = kFromM;
            if (d > h) {
                h = d;
                src = kFromD;
            }
            if (ins > h) {
                h = ins;
                src = kFromI;
            }
            h_cur[j] = std::max(h, kNegInf);
            d_cur[j] = std::max(d, kNegInf);
            i_cur[j] = std::max(ins, kNegInf);
            tb[row_off[i] + (j - lo)] = t | src;
            on_edge(i, j, h_cur[j]);
        }
        if (hi + 1 <= n2) h_cur[hi + 1] = d_cur[hi + 1] = kNegInf;
        std::swap(h_prev, h_cur);
        std::swap(d_prev, d_cur);
    }

    BandResult out;
    out.touched_edge = edge_best > h_prev[n2];
    std::int64_t i = n1, j = n2;
    int state = kFromM; // 0 = H, 1 = D, 2 = I
    Cigar rev;
    while (i > 0 || j > 0) {
        const auto t = tb[row_off[i] + (j - row_lo[i])];
        if (state == kFromM) {
            const auto src = t & kSourceMask;
            if (src == kFromM) {
                push_run(rev, CigarOp::match, 1);
                --i;
                --j;
            } else {
                state = src;
            }
            continue;
        }
        if (state == kFromD) {
            push_run(rev, CigarOp::deletion, 1);
            state = (t & kDExtend) ? kFromD : kFromM;
            --i;
        } else {
            push_run(rev, CigarOp::insertion, 1);
            state = (t & kIExtend) ? kFromI : kFromM;
            --j;
        }
    }
    out.cigar.assign(rev.rbegin(), rev.rend());
    return out;
}

} // namespace

double Alignment::error_total() const {
    return aligned_length ? static_cast<double>(mismatches + gap_bases) / static_cast<double>(aligned_length) : 0.0;
}

double Alignment::error_mutation() const {
    return aligned_length ? static_cast<double>(mismatches + short_gap_bases) / static_cast<double>(aligned_length)
                          : 0.0;
}

double Alignment::error_gap() const {
    return aligned_length ? static_cast<double>(gap_bases - short_gap_bases) / static_cast<double>(aligned_length)
                          : 0.0;
}

std::string cigar_string(const Cigar& cigar) {
    std::string out;
    for (const auto& r : cigar) {
        out += std::to_string(r.count);
        out += static_cast<char>(r.op);
    }
    return out;
}

Cigar parse_cigar(std::string_view text) {
    Cigar out;
    std::uint64_t n = 0;
    bool have = false;
    for (char c : text) {
        if (c >= '0' && c <= '9') {
            n = n * 10 + static_cast<std::uint64_t>(c - '0');
            have = true;
            continue;
        }
        if (!have || (c != 'M' && c != 'I' && c != 'D'))
            throw std::invalid_argument("malformed CIGAR '" + std::string(text) + "'");
        out.push_back({static_cast<CigarOp>(c), n});
        n = 0;
        have = false;
    }
    if (have) throw std::invalid_argument("CIGAR ends with a count: '" + std::string(text) + "'");
    return out;
}

Cigar normalize(const Cigar& cigar) {
    Cigar out;
    for (const auto& r : cigar) push_run(out, r.op, r.count);
    return out;
}

std::uint64_t reference_length(const Cigar& cigar) {
    std::uint64_t n = 0;
    for (const auto& r : cigar)
        if (r.op != CigarOp::insertion) n += r.count;
    return n;
}

std::uint64_t query_length(const Cigar& cigar) {
    std::uint64_t n = 0;
    for (const auto& r : cigar)
        if (r.op != CigarOp::deletion) n += r.count;
    return n;
}

Cigar swap_roles(const Cigar& cigar) {
    Cigar out = cigar;
    for (auto& r : out) {
        if (r.op == CigarOp::insertion)
            r.op = CigarOp::deletion;
        else if (r.op == CigarOp::deletion)
            r.op = CigarOp::insertion;
    }
    return out;
}

Alignment score_cigar(const Cigar& cigar, std::string_view s1, std::string_view s2, const AlignParams& params) {
    if (reference_length(cigar) != s1.size() || query_length(cigar) != s2.size())
        throw std::invalid_argument("CIGAR does not consume the sequences exactly");
    Alignment a;
    a.cigar = normalize(cigar);
    std::uint64_t i = 0, j = 0;
    for (const auto& r : a.cigar) {
        a.aligned_length += r.count;
        if (r.op == CigarOp::match) {
            for (std::uint64_t x = 0; x < r.count; ++x, ++i, ++j) {
                if (same_base(s1[i], s2[j])) {
                    ++a.matches;
                    a.score += params.match;
                } else {
                    ++a.mismatches;
                    a.score -= params.mismatch;
                }
            }
            continue;
        }
        a.gap_bases += r.count;
        ++a.gap_opens;
        if (r.count <= kShortGap) a.short_gap_bases += r.count;
        a.score -= params.gap_open + static_cast<std::int64_t>(r.count) * params.gap_extend;
        if (r.op == CigarOp::deletion)
            i += r.count;
        else
            j += r.count;
    }
    return a;
}

std::uint64_t auto_band(std::string_view s1, std::string_view s2) {
    const auto longest = std::max(s1.size(), s2.size());
    return std::clamp<std::uint64_t>(longest / 32, 256, 2048);
}

Alignment global_align(std::string_view s1, std::string_view s2, const AlignParams& params) {
    params.validate();
    if (s1.empty() || s2.empty()) return gap_only(s1, s2, params);
    const auto n1 = static_cast<std::int64_t>(s1.size());
    const auto n2 = static_cast<std::int64_t>(s2.size());
    const std::int64_t full_lo = -n1, full_hi = n2;
    if (!params.band) {
        auto r = banded_gotoh(s1, s2, params, full_lo, full_hi);
        return score_cigar(r.cigar, s1, s2, params);
    }
    auto b = static_cast<std::int64_t>(std::max<std::uint64_t>(*params.band, 1));
    while (true) {
        const auto dlo = std::max(full_lo, std::min<std::int64_t>(0, n2 - n1) - b);
        const auto dhi = std::min(full_hi, std::max<std::int64_t>(0, n2 - n1) + b);
        auto r = banded_gotoh(s1, s2, params, dlo, dhi);
        if (!r.touched_edge || (dlo == full_lo && dhi == full_hi)) return score_cigar(r.cigar, s1, s2, params);
        b *= 2;
    }
}

Alignment record_alignment(std::string_view s1, std::string_view s2, const AlignParams& params,
                           std::uint64_t full_cells) {
    AlignParams p = params;
    if (!p.band && static_cast<std::uint64_t>(s1.size()) * s2.size() > full_cells) p.band = auto_band(s1, s2);
    return global_align(s1, s2, p);
}

namespace {

/// Best-scoring end (i, j) of an alignment anchored at (0, 0) of a and b,
/// exploring rows while cells stay within x_drop of the best score.
std::pair<std::uint64_t, std::uint64_t> xdrop_end(std::string_view a, std::string_view b, const AlignParams& p,
                                                  std::int64_t x_drop) {
    const std::int64_t open = p.gap_open + p.gap_extend, ext = p.gap_extend;
    const auto nb = static_cast<std::int64_t>(b.size());
    std::int64_t best = 0;
    std::uint64_t bi = 0, bj = 0;

    // Rows hold kNegInf outside the live range [lo, hi].
    std::vector<std::int64_t> h(nb + 2, kNegInf), d(nb + 2, kNegInf);
    std::vector<std::int64_t> nh(nb + 2, kNegInf), nd(nb + 2, kNegInf);
    std::int64_t lo = 0, hi = 0;
    h[0] = 0;
    for (std::int64_t j = 1; j <= nb; ++j) {
        const auto v = -(p.gap_open + j * ext);
        if (v < best - x_drop) break;
        h[j] = v;
        hi = j;
    }
    for (std::int64_t i = 1; i <= static_cast<std::int64_t>(a.size()); ++i) {
        std::int64_t new_lo = -1, new_hi = -1;
        std::int64_t ins = kNegInf, left = kNegInf;
        const char ca = a[i - 1];
        for (std::int64_t j = lo; j <= nb; ++j) {
            if (j > hi + 1 && left == kNegInf && ins == kNegInf) break;
            const auto floor = best - x_drop;
            auto dv = std::max(h[j] - open, d[j] - ext);
            auto iv = j >= 1 ? std::max(left - open, ins - ext) : kNegInf;
            auto mv = j >= 1 ? h[j - 1] + (same_base(ca, b[j - 1]) ? p.match : -p.mismatch) : kNegInf;
            auto hv = std::max({mv, dv, iv});
            if (hv < floor) hv = kNegInf;
            if (dv < floor) dv = kNegInf;
            if (iv < floor) iv = kNegInf;
            nh[j] = hv;
            nd[j] = dv;
            ins = iv;
            left = hv;
            if (hv == kNegInf) continue;
            if (new_lo < 0) new_lo = j;
            new_hi = j;
            if (hv > best) {
                best = hv;
                bi = static_cast<std::uint64_t>(i);
                bj = static_cast<std::uint64_t>(j);
            }
        }
        for (std::int64_t j = lo; j <= hi; ++j) h[j] = d[j] = kNegInf;
        std::swap(h, nh);
        std::swap(d, nd);
        if (new_lo < 0) break;
        lo = new_lo;
        hi = new_hi;
    }
    return {bi, bj};
}

Alignment fill_gap(std::string_view a, std::string_view b, const AlignParams& params) {
    if (a.empty() || b.empty()) return gap_only(a, b, params);
    AlignParams p = params;
    constexpr std::uint64_t kFullLimit = 4'000'000;
    if (!p.band && a.size() * b.size() > kFullLimit) p.band = auto_band(a, b);
    try {
        return global_align(a, b, p);
    } catch (const ResourceError&) {
        Cigar c;
        const auto common = std::min(a.size(), b.size());
        push_run(c, CigarOp::match, common);
        push_run(c, CigarOp::deletion, a.size() - common);
        push_run(c, CigarOp::insertion, b.size() - common);
        return score_cigar(c, a, b, params);
    }
}

void append(Cigar& c, const Cigar& piece) {
    for (const auto& r : piece) push_run(c, r.op, r.count);
}

struct Trim {
    Cigar cigar;
    std::uint64_t skip1 = 0, skip2 = 0, keep1 = 0, keep2 = 0;
};

// Best-scoring sub-path of `c` that starts and ends on M columns.
Trim trim_ends(const Cigar& c, std::string_view a, std::string_view b, const AlignParams& p) {
    struct Col {
        std::size_t run;
        std::uint64_t off, i, j;
    };
    std::int64_t score = 0, low = 0, best = kNegInf;
    Col low_at{0, 0, 0, 0}, from{0, 0, 0, 0}, to{0, 0, 0, 0};
    std::uint64_t i = 0, j = 0;
    for (std::size_t r = 0; r < c.size(); ++r) {
        const auto& run = c[r];
        if (run.op != CigarOp::match) {
            score -= p.gap_open + static_cast<std::int64_t>(run.count) * p.gap_extend;
            (run.op == CigarOp::deletion ? i : j) += run.count;
            continue;
        }
        for (std::uint64_t o = 0; o < run.count; ++o) {
            if (score < low) {
                low = score;
                low_at = {r, o, i, j};
            }
            score += same_base(a[i], b[j]) ? p.match : -p.mismatch;
            ++i;
            ++j;
            if (score - low > best) {
                best = score - low;
                from = low_at;
                to = {r, o + 1, i, j};
            }
        }
    }
    Trim t;
    if (best == kNegInf) return t;
    t.skip1 = from.i;
    t.skip2 = from.j;
    t.keep1 = to.i - from.i;
    t.keep2 = to.j - from.j;
    for (auto r = from.run; r <= to.run; ++r) {
        const auto first = r == from.run ? from.off : 0;
        const auto last = r == to.run ? to.off : c[r].count;
        push_run(t.cigar, c[r].op, last - first);
    }
    return t;
}

} // namespace

ChainAlignment align_chain(const Chain& chain, std::string_view s1, std::string_view s2,
                           const ChainAlignOptions& options) {
    if (chain.anchors.empty()) throw std::invalid_argument("cannot align an empty chain");
    const auto& params = options.params;
    Cigar body;
    for (std::size_t x = 0; x < chain.anchors.size(); ++x) {
        const auto& an = chain.anchors[x];
        if (x > 0) {
            const auto& prev = chain.anchors[x - 1];
            auto gap = fill_gap(s1.substr(prev.end1(), an.pos1 - prev.end1()),
                                s2.substr(prev.end2(), an.pos2 - prev.end2()), params);
            append(body, gap.cigar);
        }
        push_run(body, CigarOp::match, an.length);
    }

    auto b1 = chain.anchors.front().pos1, b2 = chain.anchors.front().pos2;
    const auto t = trim_ends(body, s1.substr(b1), s2.substr(b2), params);
    if (!t.cigar.empty()) {
        body = t.cigar;
        b1 += t.skip1;
        b2 += t.skip2;
    }
    const auto e1 = b1 + reference_length(body), e2 = b2 + query_length(body);

    std::string left1(s1.substr(0, b1)), left2(s2.substr(0, b2));
    std::reverse(left1.begin(), left1.end());
    std::reverse(left2.begin(), left2.end());
    auto [li, lj] = xdrop_end(left1, left2, params, options.x_drop);
    auto [ri, rj] = xdrop_end(s1.substr(e1), s2.substr(e2), params, options.x_drop);

    Cigar full;
    append(full, fill_gap(s1.substr(b1 - li, li), s2.substr(b2 - lj, lj), params).cigar);
    append(full, body);
    append(full, fill_gap(s1.substr(e1, ri), s2.substr(e2, rj), params).cigar);

    ChainAlignment out;
    out.ref_begin = b1 - li;
    out.ref_end = e1 + ri;
    out.query_begin = b2 - lj;
    out.query_end = e2 + rj;
    out.alignment = score_cigar(full, s1.substr(out.ref_begin, out.ref_end - out.ref_begin),
                                s2.substr(out.query_begin, out.query_end - out.query_begin), params);
    return out;
}

double kimura_from_rates(double p, double q) {
    const double a = 1.0 - 2.0 * p - q;
    const double b = 1.0 - 2.0 * q;
    if (a <= 0 || b <= 0) return std::numeric_limits<double>::infinity();
    return -0.5 * std::log(a * std::sqrt(b));
}

double kimura_distance(const Alignment& aln, std::string_view s1, std::string_view s2) {
    std::uint64_t i = 0, j = 0, columns = 0, transitions = 0, transversions = 0;
    for (const auto& r : aln.cigar) {
        if (r.op == CigarOp::match) {
            for (std::uint64_t x = 0; x < r.count; ++x, ++i, ++j) {
                auto a = base_code(s1[i]), b = base_code(s2[j]);
                if (a == kBaseN || b == kBaseN) continue;
                ++columns;
                if (a == b) continue;
                if (is_transition(s1[i], s2[j]))
                    ++transitions;
                else
                    ++transversions;
            }
        } else if (r.op == CigarOp::deletion) {
            i += r.count;
        } else {
            j += r.count;
        }
    }
    if (columns == 0) return 0.0;
    return kimura_from_rates(static_cast<double>(transitions) / static_cast<double>(columns),
                             static_cast<double>(transversions) / static_cast<double>(columns));
}

double jukes_cantor_from_p(double p) {
    const double a = 1.0 - 4.0 * p / 3.0;
    if (a <= 0) return std::numeric_limits<double>::infinity();
    return -0.75 * std::log(a);
}

double jukes_cantor(const Alignment& aln) {
    const auto columns = aln.matches + aln.mismatches;
    if (columns == 0) return 0.0;
    return jukes_cantor_from_p(static_cast<double>(aln.mismatches) / static_cast<double>(columns));
}

} // namespace sdscan
