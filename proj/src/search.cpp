#include "sdscan/search.hpp"

#include "sdscan/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace sdscan {

namespace {

// Slack applied to floating-point comparisons against tau, in the seed's favour.
constexpr double kTauSlack = 1e-12;

constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();

struct SeqBounds {
    std::size_t index;
    std::uint64_t begin, end;
};

SeqBounds bounds_of(const Genome& g, std::uint64_t pos) {
    auto s = g.locate(pos);
    return {s, g.offset(s), g.offset(s) + g[s].length()};
}

} // namespace

double tau(int k, const ErrorModel& model) {
    const double dg = model.delta_g();
    return ((1.0 - dg) / (1.0 + dg)) / (2.0 * std::exp(k * model.delta_m) - 1.0);
}

double kmer_survival(int k, double delta_m) { return std::exp(-k * delta_m); }

double qgram_threshold(std::uint64_t n, int q, const ErrorModel& model) {
    const double nd = static_cast<double>(n);
    return nd * (1.0 - model.delta_g() - q * model.delta_m) - (nd * model.p_gap + 1.0) * (q - 1);
}

std::uint64_t shared_qgrams(std::string_view s1, std::string_view s2, int q) {
    if (q < 1 || q > 31) throw std::invalid_argument("q must be in [1, 31]");
    const std::uint64_t mask = (1ULL << (2 * q)) - 1;
    auto for_each_qgram = [&](std::string_view s, auto&& fn) {
        std::uint64_t packed = 0;
        int run = 0;
        for (char ch : s) {
            auto c = base_code(ch);
            if (c == kBaseN) {
                run = 0;
                packed = 0;
                continue;
            }
            packed = ((packed << 2) | c) & mask;
            if (++run >= q) fn(packed);
        }
    };
    std::uint64_t shared = 0;
    if (q <= 12) {
        std::vector<std::uint32_t> counts(std::size_t{1} << (2 * q), 0);
        for_each_qgram(s1, [&](std::uint64_t g) { ++counts[g]; });
        for_each_qgram(s2, [&](std::uint64_t g) {
            if (counts[g] > 0) {
                --counts[g];
                ++shared;
            }
        });
    } else {
        std::unordered_map<std::uint64_t, std::uint32_t> counts;
        for_each_qgram(s1, [&](std::uint64_t g) { ++counts[g]; });
        for_each_qgram(s2, [&](std::uint64_t g) {
            auto it = counts.find(g);
            if (it != counts.end() && it->second > 0) {
                --it->second;
                ++shared;
            }
        });
    }
    return shared;
}

bool qgram_accept(std::string_view s1, std::string_view s2, int q, const ErrorModel& model) {
    if (s1.size() > s2.size()) std::swap(s1, s2);
    const double threshold = qgram_threshold(s1.size(), q, model);
    if (threshold <= 0) return true;
    return static_cast<double>(shared_qgrams(s1, s2, q)) >= threshold - 1e-9;
}

std::vector<std::uint64_t> window_hashes(const MinimizerIndex& index, std::uint64_t begin, std::uint64_t end) {
    auto [a, b] = index.window(begin, end);
    auto h = index.hashes();
    return {h.begin() + static_cast<std::ptrdiff_t>(a), h.begin() + static_cast<std::ptrdiff_t>(b)};
}

namespace {

/// Adds the target window [j_begin, j_begin+m) to `est` on the other side,
/// slides it to j_end, then removes it again.
void roll_other(RollingEstimator& est, const MinimizerIndex& target, std::uint64_t j_begin, std::uint64_t j_end,
                std::uint64_t m, const std::function<void(const RollStep&)>& visit) {
    const auto k = static_cast<std::uint64_t>(target.params().k);
    auto pos = target.positions();
    auto hs = target.hashes();
    const std::size_t total = pos.size();
    if (m < k) {
        visit({j_begin, j_end + 1, est.shared_in_sketch(), est.sketch_size(), est.estimate()});
        return;
    }
    std::uint64_t j = j_begin;
    auto [lo, hi] = target.window(j, j + m);
    if (hi == 0 && lo == 0) {
        auto it = std::lower_bound(pos.begin(), pos.end(), j);
        lo = hi = static_cast<std::size_t>(it - pos.begin());
    }
    for (auto e = lo; e < hi; ++e) est.add(hs[e], Side::other);

    while (true) {
        std::uint64_t next = j_end + 1;
        if (lo < hi) next = std::min(next, pos[lo] + 1);
        if (hi < total) next = std::min(next, pos[hi] + k - m);
        visit({j, next, est.shared_in_sketch(), est.sketch_size(), est.estimate()});
        if (next > j_end) break;
        j = next;
        while (lo < hi && pos[lo] < j) est.remove(hs[lo++], Side::other);
        while (hi < total && pos[hi] + k <= j + m) est.add(hs[hi++], Side::other);
    }
    for (auto e = lo; e < hi; ++e) est.remove(hs[e], Side::other);
}

struct Exclusion {
    bool active = false;
    std::int64_t lo = 0, hi = 0;
};

void seed_window(const SearchSpace& space, const ErrorModel& model, std::uint64_t i, std::uint64_t n,
                 double tau_v, RollingEstimator& est, std::vector<SeedSD>& out) {
    const auto k = static_cast<std::uint64_t>(space.query_index.params().k);
    auto [qa, qb] = space.query_index.window(i, i + n);
    if (qa == qb) return;
    auto qh = space.query_index.hashes();
    std::vector<std::uint64_t> distinct(qh.begin() + static_cast<std::ptrdiff_t>(qa),
                                        qh.begin() + static_cast<std::ptrdiff_t>(qb));
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const std::size_t s = distinct.size();

    std::vector<std::uint64_t> hits;
    for (auto h : distinct)
        for (auto p : space.target_index.lookup(h)) hits.push_back(p);
    if (hits.empty()) return;
    std::sort(hits.begin(), hits.end());

    const auto min_hits = static_cast<std::size_t>(std::max(1.0, std::ceil(tau_v * static_cast<double>(s) - kTauSlack)));
    const auto qseq = space.query.locate(i);

    est.clear();
    for (auto e = qa; e < qb; ++e) est.add(qh[e], Side::own);

    std::size_t a = 0;
    while (a < hits.size()) {
        const auto tb = bounds_of(space.target, hits[a]);
        std::size_t b = a + 1;
        while (b < hits.size() && hits[b] < tb.end && hits[b] - hits[b - 1] <= n) ++b;
        const std::uint64_t first = hits[a], last = hits[b - 1];
        const std::size_t group = b - a;
        a = b;
        if (group < min_hits || tb.end - tb.begin < n) continue;

        const std::uint64_t jb = std::max<std::uint64_t>(tb.begin, first + k > n ? first + k - n : 0);
        const std::uint64_t je = std::min<std::uint64_t>(last, tb.end - n);
        if (jb > je) continue;

        Exclusion ex;
        if (tb.index == qseq) {
            ex.active = true;
            const auto ii = static_cast<std::int64_t>(i);
            const auto nn = static_cast<std::int64_t>(n);
            if (space.strand == Strand::forward) {
                // Seed windows on the same strand of one sequence must not overlap.
                ex.lo = ii - nn + 1;
                ex.hi = ii + nn - 1;
            } else {
                const double d = static_cast<double>(n) * (1.0 - model.delta);
                const auto c = static_cast<std::int64_t>(2 * tb.begin + (tb.end - tb.begin)) - nn;
                const double x = static_cast<double>(c - ii);
                ex.lo = static_cast<std::int64_t>(std::floor(x - d)) + 1;
                ex.hi = static_cast<std::int64_t>(std::ceil(x + d)) - 1;
            }
        }

        double best_e = -1;
        std::uint64_t best_j = 0;
        roll_other(est, space.target_index, jb, je, n, [&](const RollStep& st) {
            if (st.estimate < tau_v - kTauSlack || st.estimate <= best_e) return;
            auto lo = static_cast<std::int64_t>(st.j);
            const auto hi = static_cast<std::int64_t>(std::min(st.next - 1, je));
            if (ex.active && lo >= ex.lo && lo <= ex.hi) lo = ex.hi + 1;
            if (lo > hi) return;
            best_e = st.estimate;
            best_j = static_cast<std::uint64_t>(lo);
        });
        if (best_e >= 0) out.push_back({i, best_j, n, n, best_e, space.strand});
    }
}

} // namespace

void roll_candidates(const MinimizerIndex& query_index, std::uint64_t i, std::uint64_t n,
                     const MinimizerIndex& target_index, std::uint64_t j_begin, std::uint64_t j_end,
                     std::uint64_t m, const std::function<void(const RollStep&)>& visit) {
    RollingEstimator est;
    auto [qa, qb] = query_index.window(i, i + n);
    auto qh = query_index.hashes();
    for (auto e = qa; e < qb; ++e) est.add(qh[e], Side::own);
    roll_other(est, target_index, j_begin, j_end, m, visit);
}

std::vector<SeedSD> find_seed_sds(const SearchSpace& space, const ErrorModel& model, const SeedOptions& options) {
    model.validate();
    const std::uint64_t n = options.window;
    const std::uint64_t stride = options.stride ? options.stride : std::max<std::uint64_t>(1, n / 2);
    const double tau_v = tau(space.query_index.params().k, model);

    std::vector<std::uint64_t> starts;
    for (std::size_t s = 0; s < space.query.size(); ++s) {
        const auto off = space.query.offset(s);
        const auto len = space.query[s].length();
        if (len < n) continue;
        std::uint64_t p = 0;
        for (; p + n <= len; p += stride) starts.push_back(off + p);
        if (starts.back() != off + len - n) starts.push_back(off + len - n);
    }

    constexpr std::size_t kUnit = 64;
    const std::size_t units = (starts.size() + kUnit - 1) / kUnit;
    std::vector<std::vector<SeedSD>> results(units);
    parallel_for(units, options.threads, [&](std::size_t u) {
        RollingEstimator est;
        const auto end = std::min(starts.size(), (u + 1) * kUnit);
        for (auto x = u * kUnit; x < end; ++x) seed_window(space, model, starts[x], n, tau_v, est, results[u]);
    });

    std::vector<SeedSD> seeds;
    for (auto& r : results) seeds.insert(seeds.end(), r.begin(), r.end());
    std::sort(seeds.begin(), seeds.end(), [](const SeedSD& a, const SeedSD& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    return seeds;
}

std::vector<SeedSD> find_seed_sds(const MinimizerIndex& index, const Genome& genome, const ErrorModel& model,
                                  std::uint64_t n) {
    SearchSpace space{genome, genome, index, index, Strand::forward};
    SeedOptions opt;
    opt.window = n;
    return find_seed_sds(space, model, opt);
}

// ---------------------------------------------------------------------------
// Extension

namespace {

Interval target_to_forward(const SearchSpace& space, std::uint64_t b, std::uint64_t e) {
    const auto tb = bounds_of(space.target, b);
    const auto& name = space.target[tb.index].name;
    if (space.strand == Strand::forward) return {name, b - tb.begin, e - tb.begin, Strand::forward};
    const auto len = tb.end - tb.begin;
    return {name, len - (e - tb.begin), len - (b - tb.begin), Strand::reverse};
}

/// Stream of index entries entering a window that grows away from `anchor`.
class EntryCursor {
  public:
    EntryCursor(const MinimizerIndex& idx, bool forward, std::uint64_t window_begin, std::uint64_t window_end)
        : pos_(idx.positions()), hs_(idx.hashes()), k_(idx.params().k), forward_(forward) {
        if (forward) {
            anchor_ = static_cast<std::int64_t>(window_end);
            // First entry whose k-mer does not fit in the current window.
            const auto limit = window_end >= static_cast<std::uint64_t>(k_) ? window_end - k_ + 1 : 0;
            cur_ = std::lower_bound(pos_.begin(), pos_.end(), limit) - pos_.begin();
        } else {
            anchor_ = static_cast<std::int64_t>(window_begin);
            cur_ = (std::lower_bound(pos_.begin(), pos_.end(), window_begin) - pos_.begin()) - 1;
        }
    }

    std::int64_t next_t() const {
        if (forward_) {
            if (cur_ >= static_cast<std::int64_t>(pos_.size())) return kNever;
            return static_cast<std::int64_t>(pos_[cur_]) + k_ - anchor_;
        }
        if (cur_ < 0) return kNever;
        return anchor_ - static_cast<std::int64_t>(pos_[cur_]);
    }
    std::uint64_t hash() const { return hs_[cur_]; }
    void advance() { cur_ += forward_ ? 1 : -1; }

  private:
    std::span<const std::uint64_t> pos_, hs_;
    std::int64_t k_;
    bool forward_;
    std::int64_t anchor_ = 0;
    std::int64_t cur_ = 0;
};

void load(RollingEstimator& est, const SearchSpace& space, const RegionCoords& r) {
    est.clear();
    auto [qa, qb] = space.query_index.window(r.begin1, r.end1);
    for (auto e = qa; e < qb; ++e) est.add(space.query_index.hashes()[e], Side::own);
    auto [ta, tb] = space.target_index.window(r.begin2, r.end2);
    for (auto e = ta; e < tb; ++e) est.add(space.target_index.hashes()[e], Side::other);
}

RegionCoords shifted(RegionCoords r, bool forward, std::uint64_t t) {
    if (forward) {
        r.end1 += t;
        r.end2 += t;
    } else {
        r.begin1 -= t;
        r.begin2 -= t;
    }
    return r;
}

} // namespace

std::uint64_t pair_overlap(const SearchSpace& space, const RegionCoords& r) {
    const auto qb = bounds_of(space.query, r.begin1);
    Interval a{space.query[qb.index].name, r.begin1 - qb.begin, r.end1 - qb.begin, Strand::forward};
    Interval b = target_to_forward(space, r.begin2, r.end2);
    return overlap_length(a, b);
}

RegionCoords extend_seed(const SearchSpace& space, const SeedSD& seed, const ErrorModel& model,
                         const ExtendOptions& options) {
    const double tau_v = tau(space.query_index.params().k, model);
    const auto slack = static_cast<std::int64_t>(options.slack ? options.slack : seed.n);
    const auto qb = bounds_of(space.query, seed.i);
    const auto tb = bounds_of(space.target, seed.j);
    const bool same_seq = qb.index == tb.index;

    RegionCoords r{seed.i, seed.i + seed.n, seed.j, seed.j + seed.m, seed.estimate};

    auto overlap_ok = [&](const RegionCoords& c) {
        if (!same_seq) return true;
        const auto len = std::min(c.end1 - c.begin1, c.end2 - c.begin2);
        return static_cast<double>(pair_overlap(space, c)) <= model.delta * static_cast<double>(len) + 1e-9;
    };

    RollingEstimator est;
    for (bool forward : {true, false}) {
        const auto longest = std::max(r.end1 - r.begin1, r.end2 - r.begin2);
        std::uint64_t room = longest < options.max_length ? options.max_length - longest : 0;
        if (forward)
            room = std::min({room, qb.end - r.end1, tb.end - r.end2});
        else
            room = std::min({room, r.begin1 - qb.begin, r.begin2 - tb.begin});
        if (!overlap_ok(shifted(r, forward, room))) {
            // Overlap grows monotonically with the extension; find the last admissible step.
            std::uint64_t lo = 0, hi = room;
            if (!overlap_ok(r)) {
                hi = 0;
            } else {
                while (lo < hi) {
                    auto mid = lo + (hi - lo + 1) / 2;
                    if (overlap_ok(shifted(r, forward, mid)))
                        lo = mid;
                    else
                        hi = mid - 1;
                }
            }
            room = lo;
        }
        const auto limit = static_cast<std::int64_t>(room);

        load(est, space, r);
        EntryCursor own(space.query_index, forward, r.begin1, r.end1);
        EntryCursor other(space.target_index, forward, r.begin2, r.end2);
        std::int64_t best = 0;
        double e = est.estimate();
        while (true) {
            const auto nt = std::min(own.next_t(), other.next_t());
            if (e >= tau_v - kTauSlack) best = std::min(nt == kNever ? limit : nt - 1, limit);
            if (nt > limit) break;
            if (e < tau_v - kTauSlack && nt - best > slack) break;
            while (own.next_t() == nt) {
                est.add(own.hash(), Side::own);
                own.advance();
            }
            while (other.next_t() == nt) {
                est.add(other.hash(), Side::other);
                other.advance();
            }
            e = est.estimate();
        }
        r = shifted(r, forward, static_cast<std::uint64_t>(best));
    }
    load(est, space, r);
    r.estimate = est.estimate();
    return r;
}

PotentialRegion to_potential_region(const SearchSpace& space, const RegionCoords& r) {
    const auto qb = bounds_of(space.query, r.begin1);
    PotentialRegion p;
    p.region1 = {space.query[qb.index].name, r.begin1 - qb.begin, r.end1 - qb.begin, Strand::forward};
    p.region2 = target_to_forward(space, r.begin2, r.end2);
    p.strand = space.strand;
    p.estimate = r.estimate;
    return p;
}

Interval pad_interval(const Genome& genome, const Interval& iv, std::uint64_t max_length) {
    auto s = genome.find(iv.seq_name);
    if (!s) throw std::invalid_argument("unknown sequence " + iv.seq_name);
    const auto len = iv.length();
    std::uint64_t pad = std::min<std::uint64_t>(5000, (len + 3) / 4);
    pad = std::min<std::uint64_t>(pad, len < max_length ? (max_length - len) / 2 : 0);
    Interval out = iv;
    out.start = iv.start > pad ? iv.start - pad : 0;
    out.end = std::min<std::uint64_t>(genome[*s].length(), iv.end + pad);
    return out;
}

PotentialRegion pad_region(const Genome& genome, PotentialRegion r, std::uint64_t max_length) {
    r.region1 = pad_interval(genome, r.region1, max_length);
    r.region2 = pad_interval(genome, r.region2, max_length);
    r.padded = true;
    return r;
}

std::vector<PotentialRegion> merge_regions(std::vector<PotentialRegion> regions, std::uint64_t max_length) {
    auto group = [](const PotentialRegion& r) { return std::tie(r.region1.seq_name, r.region2.seq_name, r.strand); };
    auto key = [](const PotentialRegion& r) {
        return std::tie(r.region1.seq_name, r.region2.seq_name, r.strand, r.region1.start, r.region2.start,
                        r.region1.end, r.region2.end);
    };
    auto overlap = [](const Interval& a, const Interval& b) { return a.start < b.end && b.start < a.end; };
    for (;;) {
        std::sort(regions.begin(), regions.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
        std::vector<PotentialRegion> out;
        std::vector<std::size_t> active;
        for (auto& r : regions) {
            if (!out.empty() && group(out.back()) != group(r)) active.clear();
            std::erase_if(active, [&](std::size_t x) { return out[x].region1.end <= r.region1.start; });
            bool merged = false;
            for (auto x : active) {
                auto& m = out[x];
                if (!overlap(m.region2, r.region2)) continue;
                const auto b1 = std::min(m.region1.start, r.region1.start), e1 = std::max(m.region1.end, r.region1.end);
                const auto b2 = std::min(m.region2.start, r.region2.start), e2 = std::max(m.region2.end, r.region2.end);
                if (e1 - b1 > max_length || e2 - b2 > max_length) continue;
                m.region1.start = b1;
                m.region1.end = e1;
                m.region2.start = b2;
                m.region2.end = e2;
                m.estimate = std::max(m.estimate, r.estimate);
                m.padded = m.padded || r.padded;
                merged = true;
                break;
            }
            if (merged) continue;
            active.push_back(out.size());
            out.push_back(std::move(r));
        }
        const bool stable = out.size() == regions.size();
        regions = std::move(out);
        if (stable) return regions;
    }
}

void write_regions(const std::vector<PotentialRegion>& regions, std::ostream& out) {
    for (const auto& r : regions) {
        out << r.region1.seq_name << '\t' << r.region1.start << '\t' << r.region1.end << '\t' << r.region2.seq_name
            << '\t' << r.region2.start << '\t' << r.region2.end << '\t' << strand_char(r.strand) << '\t'
            << format_double(r.estimate) << '\n';
    }
}

std::vector<PotentialRegion> read_regions(std::istream& in) {
    std::vector<PotentialRegion> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        PotentialRegion r;
        std::string strand;
        if (!(ss >> r.region1.seq_name >> r.region1.start >> r.region1.end >> r.region2.seq_name >>
              r.region2.start >> r.region2.end >> strand >> r.estimate))
            throw ParseError("malformed region line", lineno);
        if (strand != "+" && strand != "-") throw ParseError("bad strand '" + strand + "'", lineno);
        r.strand = strand == "+" ? Strand::forward : Strand::reverse;
        r.region2.strand = r.strand;
        r.padded = true;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace sdscan
