#include "sdscan/pipeline.hpp"

#include "sdscan/dna.hpp"
#include "sdscan/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <tuple>

namespace sdscan {

void RunConfig::validate() const {
    model.validate();
    seed_sketch.validate();
    if (anchor_k < 1 || anchor_k > 31) throw std::invalid_argument("anchor k must be in [1, 31]");
    if (q < 1 || q > 31) throw std::invalid_argument("q must be in [1, 31]");
    if (seed_window < static_cast<std::uint64_t>(seed_sketch.k)) throw std::invalid_argument("seed window shorter than k");
    if (max_region == 0) throw std::invalid_argument("max region must be positive");
    if (!(reciprocal_overlap > 0 && reciprocal_overlap <= 1))
        throw std::invalid_argument("reciprocal overlap must be in (0, 1]");
    if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
    align.validate();
}

namespace {

struct SeqBounds {
    std::uint64_t begin, length;
};

SeqBounds seq_bounds(const Genome& g, std::uint64_t pos) {
    auto s = g.locate(pos);
    return {g.offset(s), g[s].length()};
}

const Sequence& sequence_of(const Genome& genome, const Interval& iv) {
    auto s = genome.find(iv.seq_name);
    if (!s) throw std::invalid_argument("unknown sequence " + iv.seq_name);
    return genome[*s];
}

double masked_fraction(const Genome& genome, const Interval& iv) {
    auto s = genome.find(iv.seq_name);
    if (!s || iv.length() == 0) return 0.0;
    return static_cast<double>(genome.masked_count(*s, iv.start, iv.end)) / static_cast<double>(iv.length());
}

bool contains(const Interval& outer, const Interval& inner) {
    return outer.seq_name == inner.seq_name && outer.start <= inner.start && inner.end <= outer.end;
}

bool reciprocal(const Interval& a, const Interval& b, double frac) {
    const auto ov = static_cast<double>(overlap_length(a, b));
    return ov >= frac * static_cast<double>(a.length()) && ov >= frac * static_cast<double>(b.length());
}

bool overlap_ok(const SDRecord& r, double delta) {
    if (r.mate1.seq_name != r.mate2.seq_name) return true;
    const auto n = std::min(r.mate1.length(), r.mate2.length());
    return static_cast<double>(overlap_length(r.mate1, r.mate2)) <= delta * static_cast<double>(n) + 1e-9;
}

/// Mirror image of a seed so that the query window comes first.
SeedSD canonical_seed(const Genome& genome, SeedSD s) {
    if (s.strand == Strand::forward) {
        if (s.j < s.i) std::swap(s.i, s.j);
        return s;
    }
    const auto tb = seq_bounds(genome, s.j);
    const auto qb = seq_bounds(genome, s.i);
    const auto fwd_j = 2 * tb.begin + tb.length - s.j - s.m;
    if (fwd_j < s.i) {
        const auto rc_i = 2 * qb.begin + qb.length - s.i - s.n;
        s.i = fwd_j;
        s.j = rc_i;
        std::swap(s.n, s.m);
    }
    return s;
}

MinimizerIndex load_or_build(const Genome& genome, const SketchParams& params, bool seed_mode,
                             const std::optional<std::string>& dir, const std::string& name) {
    if (!dir) return build_index(genome, params, seed_mode);
    const auto path = (std::filesystem::path(*dir) / name).string();
    if (std::filesystem::exists(path)) {
        try {
            return MinimizerIndex::load(path, params, seed_mode, genome.total_length());
        } catch (const IoError&) {
            // Stale or foreign file: rebuild below.
        }
    }
    auto index = build_index(genome, params, seed_mode);
    index.save(path, genome.total_length());
    return index;
}

Chain sub_chain(const Chain& c, std::size_t first, std::size_t last) {
    Chain out;
    out.anchors.assign(c.anchors.begin() + static_cast<std::ptrdiff_t>(first),
                       c.anchors.begin() + static_cast<std::ptrdiff_t>(last));
    out.begin1 = out.anchors.front().pos1;
    out.begin2 = out.anchors.front().pos2;
    out.end1 = out.anchors.back().end1();
    out.end2 = out.anchors.back().end2();
    out.tier = c.tier;
    return out;
}

void fill_from_alignment(const Genome& genome, SDRecord& r, const Alignment& aln, std::string_view s1,
                         std::string_view s2) {
    r.alignment_length = aln.aligned_length;
    r.edit_distance = aln.edit_distance();
    r.error_total = aln.error_total();
    r.error_mutation = aln.error_mutation();
    r.error_gap = aln.error_gap();
    r.cigar = cigar_string(aln.cigar);
    r.kimura = kimura_distance(aln, s1, s2);
    r.jukes_cantor = jukes_cantor(aln);
    r.masked_fraction1 = masked_fraction(genome, r.mate1);
    r.masked_fraction2 = masked_fraction(genome, r.mate2);
}

} // namespace

std::string oriented_bases(const Genome& genome, const Interval& iv) {
    const auto& seq = sequence_of(genome, iv);
    if (iv.end > seq.length() || iv.start > iv.end) throw std::out_of_range("interval outside " + iv.seq_name);
    auto sub = std::string_view(seq.bases).substr(iv.start, iv.length());
    return iv.strand == Strand::forward ? std::string(sub) : reverse_complement(sub);
}

SDRecord canonicalize(SDRecord r) {
    auto cigar = parse_cigar(r.cigar);
    if (position_less(r.mate2, r.mate1)) {
        std::swap(r.mate1, r.mate2);
        std::swap(r.masked_fraction1, r.masked_fraction2);
        cigar = swap_roles(cigar);
    }
    if (r.mate1.strand == Strand::reverse) {
        // Reading both mates on the other strand reverses the column order.
        std::reverse(cigar.begin(), cigar.end());
        r.mate1.strand = Strand::forward;
        r.mate2.strand = r.mate2.strand == Strand::forward ? Strand::reverse : Strand::forward;
    }
    r.cigar = cigar_string(normalize(cigar));
    return r;
}

SDRecord make_record(const Genome& genome, Interval a, Interval b, const AlignParams& params) {
    const bool inverted = a.strand != b.strand;
    if (position_less(b, a)) std::swap(a, b);
    a.strand = Strand::forward;
    b.strand = inverted ? Strand::reverse : Strand::forward;

    SDRecord r;
    r.mate1 = a;
    r.mate2 = b;
    const auto s1 = oriented_bases(genome, a);
    const auto s2 = oriented_bases(genome, b);
    fill_from_alignment(genome, r, record_alignment(s1, s2, params), s1, s2);
    return r;
}

SDRecord make_record(const Genome& genome, const Interval& a, const Interval& b, const Cigar& cigar,
                     const AlignParams& params) {
    SDRecord r;
    r.mate1 = a;
    r.mate2 = b;
    r.cigar = cigar_string(cigar);
    r = canonicalize(std::move(r));
    const auto s1 = oriented_bases(genome, r.mate1);
    const auto s2 = oriented_bases(genome, r.mate2);
    fill_from_alignment(genome, r, score_cigar(parse_cigar(r.cigar), s1, s2, params), s1, s2);
    return r;
}

std::vector<SDRecord> process_region(const Genome& genome, const PotentialRegion& region, const RunConfig& config,
                                     RegionOutcome* outcome) {
    const auto s1 = oriented_bases(genome, region.region1);
    const auto s2 = oriented_bases(genome, region.region2);
    const double delta = config.model.delta;
    std::vector<SDRecord> out;
    if (config.qgram_filter && !qgram_accept(s1, s2, config.q, config.model)) return out;
    if (outcome) outcome->passed_qgram = true;

    AnchorOptions ao;
    ao.k = config.anchor_k;
    ao.max_occurrences = config.anchor_max_occurrences;
    if (region.strand == Strand::forward && region.region1.seq_name == region.region2.seq_name)
        ao.excluded_diagonal =
            static_cast<std::int64_t>(region.region2.start) - static_cast<std::int64_t>(region.region1.start);
    const auto anchors = find_anchors(s1, s2, ao);
    const auto initial =
        initial_chains(anchors, config.model.delta_g(), std::max(s1.size(), s2.size()), config.chain);
    const auto min_span = static_cast<std::uint64_t>(std::ceil(1000.0 * (1.0 - delta) - 1e-9));
    const auto refined = refine_chains(initial, config.chain, min_span);
    if (outcome) outcome->chains = refined.size();

    ChainAlignOptions cao{config.align, config.x_drop};
    // A piece split off a chain is aligned inside the window up to the
    // neighbouring anchors, so its ends cannot grow back across the cut.
    struct Window {
        std::uint64_t lo1, hi1, lo2, hi2;
    };
    auto emit = [&](auto&& self, const Chain& chain, Window win) -> void {
        if (std::max(chain.span1(), chain.span2()) < min_span) return;
        Chain local = chain;
        for (auto& an : local.anchors) {
            an.pos1 -= win.lo1;
            an.pos2 -= win.lo2;
        }
        local.begin1 -= win.lo1;
        local.end1 -= win.lo1;
        local.begin2 -= win.lo2;
        local.end2 -= win.lo2;
        auto ca = align_chain(local, std::string_view(s1).substr(win.lo1, win.hi1 - win.lo1),
                              std::string_view(s2).substr(win.lo2, win.hi2 - win.lo2), cao);
        ca.ref_begin += win.lo1;
        ca.ref_end += win.lo1;
        ca.query_begin += win.lo2;
        ca.query_end += win.lo2;
        Interval a{region.region1.seq_name, region.region1.start + ca.ref_begin, region.region1.start + ca.ref_end,
                   Strand::forward};
        Interval b;
        b.seq_name = region.region2.seq_name;
        if (region.strand == Strand::forward) {
            b.start = region.region2.start + ca.query_begin;
            b.end = region.region2.start + ca.query_end;
            b.strand = Strand::forward;
        } else {
            b.start = region.region2.end - ca.query_end;
            b.end = region.region2.end - ca.query_begin;
            b.strand = Strand::reverse;
        }
        if (ca.alignment.aligned_length < 1000) return;
        const auto n = std::min(a.length(), b.length());
        const bool apart = a.seq_name != b.seq_name ||
                           static_cast<double>(overlap_length(a, b)) <= delta * static_cast<double>(n) + 1e-9;
        if (apart && ca.alignment.error_total() <= delta + 1e-12) {
            out.push_back(make_record(genome, a, b, ca.alignment.cigar, config.align));
            // anchors left out by end trimming
            std::size_t head = 0;
            while (head < chain.anchors.size() && chain.anchors[head].end1() <= ca.ref_begin &&
                   chain.anchors[head].end2() <= ca.query_begin)
                ++head;
            std::size_t tail = chain.anchors.size();
            while (tail > head && chain.anchors[tail - 1].pos1 >= ca.ref_end &&
                   chain.anchors[tail - 1].pos2 >= ca.query_end)
                --tail;
            if (head > 0)
                self(self, sub_chain(chain, 0, head), Window{win.lo1, ca.ref_begin, win.lo2, ca.query_begin});
            if (tail < chain.anchors.size())
                self(self, sub_chain(chain, tail, chain.anchors.size()),
                     Window{ca.ref_end, win.hi1, ca.query_end, win.hi2});
            return;
        }
        if (chain.anchors.size() < 2) return;
        std::size_t cut = 1;
        std::uint64_t widest = 0;
        for (std::size_t x = 1; x < chain.anchors.size(); ++x) {
            const auto& p = chain.anchors[x - 1];
            const auto& c = chain.anchors[x];
            const auto gap = std::max(c.pos1 - p.end1(), c.pos2 - p.end2());
            if (gap > widest) {
                widest = gap;
                cut = x;
            }
        }
        const auto& left_end = chain.anchors[cut - 1];
        const auto& right_start = chain.anchors[cut];
        self(self, sub_chain(chain, 0, cut), Window{win.lo1, right_start.pos1, win.lo2, right_start.pos2});
        self(self, sub_chain(chain, cut, chain.anchors.size()),
             Window{left_end.end1(), win.hi1, left_end.end2(), win.hi2});
    };
    for (const auto& c : refined) emit(emit, c, Window{0, s1.size(), 0, s2.size()});
    return out;
}

std::vector<PotentialRegion> find_regions(const Genome& genome, const RunConfig& config, RunStats* stats) {
    const auto& dir = config.checkpoint_dir;
    std::string regions_path;
    if (dir) {
        std::filesystem::create_directories(*dir);
        regions_path = (std::filesystem::path(*dir) / "regions.tsv").string();
        if (std::filesystem::exists(regions_path)) {
            std::ifstream in(regions_path);
            if (!in) throw IoError("cannot read " + regions_path);
            auto regions = read_regions(in);
            if (stats) {
                stats->regions = regions.size();
                stats->regions_from_checkpoint = true;
            }
            return regions;
        }
    }

    const auto seed_fwd = load_or_build(genome, config.seed_sketch, true, dir, "seed_fwd.idx");
    const auto full_fwd = load_or_build(genome, config.seed_sketch, false, dir, "full_fwd.idx");
    Genome rc;
    MinimizerIndex seed_rc, full_rc;
    if (config.reverse_strand) {
        rc = genome.reverse_complement();
        seed_rc = load_or_build(rc, config.seed_sketch, true, dir, "seed_rc.idx");
        full_rc = load_or_build(rc, config.seed_sketch, false, dir, "full_rc.idx");
    }

    std::vector<PotentialRegion> regions;
    for (auto strand : {Strand::forward, Strand::reverse}) {
        if (strand == Strand::reverse && !config.reverse_strand) continue;
        const bool fwd = strand == Strand::forward;
        const Genome& target = fwd ? genome : rc;
        SearchSpace seed_space{genome, target, seed_fwd, fwd ? seed_fwd : seed_rc, strand};
        SearchSpace full_space{genome, target, full_fwd, fwd ? full_fwd : full_rc, strand};

        SeedOptions so;
        so.window = config.seed_window;
        so.threads = config.threads;
        auto seeds = find_seed_sds(seed_space, config.model, so);
        for (auto& s : seeds) s = canonical_seed(genome, s);
        std::sort(seeds.begin(), seeds.end(), [](const SeedSD& a, const SeedSD& b) {
            return std::tie(a.i, a.j, a.n, a.m) < std::tie(b.i, b.j, b.n, b.m);
        });
        seeds.erase(std::unique(seeds.begin(), seeds.end(),
                                [](const SeedSD& a, const SeedSD& b) {
                                    return a.i == b.i && a.j == b.j && a.n == b.n && a.m == b.m;
                                }),
                    seeds.end());
        if (stats) stats->seeds += seeds.size();

        ExtendOptions eo;
        eo.max_length = config.max_region;
        std::vector<RegionCoords> found;
        for (std::size_t b = 0; b < seeds.size(); b += config.batch_size) {
            std::vector<SeedSD> pending;
            const auto batch_start = found.size();
            const auto end = std::min(seeds.size(), b + config.batch_size);
            for (auto x = b; x < end; ++x) {
                const auto& s = seeds[x];
                bool covered = std::any_of(found.begin(), found.end(), [&](const RegionCoords& r) { return r.contains(s); });
                if (!covered) pending.push_back(s);
            }
            std::vector<RegionCoords> grown(pending.size());
            parallel_for(pending.size(), config.threads,
                         [&](std::size_t x) { grown[x] = extend_seed(full_space, pending[x], config.model, eo); });
            for (std::size_t x = 0; x < pending.size(); ++x) {
                const auto& s = pending[x];
                if (std::none_of(found.begin() + static_cast<std::ptrdiff_t>(batch_start), found.end(),
                                 [&](const RegionCoords& r) { return r.contains(s); }))
                    found.push_back(grown[x]);
            }
            if (stats) stats->extended += pending.size();
        }
        for (const auto& r : found)
            regions.push_back(pad_region(genome, to_potential_region(full_space, r), config.max_region));
    }

    regions = merge_regions(std::move(regions), config.max_region);
    if (stats) stats->regions = regions.size();

    if (dir) {
        std::ofstream out(regions_path);
        if (!out) throw IoError("cannot write " + regions_path);
        write_regions(regions, out);
        if (!out) throw IoError("write failed: " + regions_path);
    }
    return regions;
}

std::vector<SDRecord> filter_final(std::vector<SDRecord> records, std::uint64_t masked_unique_min) {
    auto unmasked = [](const Interval& iv, double masked) {
        return static_cast<std::uint64_t>(std::llround(static_cast<double>(iv.length()) * (1.0 - masked)));
    };
    std::erase_if(records, [&](const SDRecord& r) {
        return unmasked(r.mate1, r.masked_fraction1) < masked_unique_min ||
               unmasked(r.mate2, r.masked_fraction2) < masked_unique_min;
    });
    return records;
}

std::vector<SDRecord> remove_redundant(std::vector<SDRecord> records, double reciprocal_frac) {
    auto span = [](const SDRecord& r) { return std::max(r.mate1.length(), r.mate2.length()); };
    std::sort(records.begin(), records.end(), [&](const SDRecord& a, const SDRecord& b) {
        if (span(a) != span(b)) return span(a) > span(b);
        if (a.error_total != b.error_total) return a.error_total < b.error_total;
        return record_less(a, b);
    });
    std::vector<SDRecord> kept;
    std::multimap<std::pair<std::string, std::uint64_t>, std::size_t> by_start;
    std::uint64_t longest = 0;
    for (auto& r : records) {
        const auto from = r.mate1.start > longest ? r.mate1.start - longest : 0;
        bool redundant = false;
        for (auto it = by_start.lower_bound({r.mate1.seq_name, from});
             it != by_start.end() && it->first.first == r.mate1.seq_name && it->first.second < r.mate1.end; ++it) {
            const auto& k = kept[it->second];
            if (k.relative_strand() != r.relative_strand()) continue;
            if ((contains(k.mate1, r.mate1) && contains(k.mate2, r.mate2)) ||
                (reciprocal(k.mate1, r.mate1, reciprocal_frac) && reciprocal(k.mate2, r.mate2, reciprocal_frac))) {
                redundant = true;
                break;
            }
        }
        if (redundant) continue;
        longest = std::max(longest, r.mate1.length());
        by_start.emplace(std::make_pair(r.mate1.seq_name, r.mate1.start), kept.size());
        kept.push_back(std::move(r));
    }
    return kept;
}

std::vector<SDRecord> finalize_records(std::vector<SDRecord> records, const RunConfig& config) {
    const double delta = config.model.delta;
    std::erase_if(records, [&](const SDRecord& r) {
        return r.alignment_length < 1000 || r.error_total > delta + 1e-12 || !overlap_ok(r, delta);
    });
    records = remove_redundant(std::move(records), config.reciprocal_overlap);
    records = filter_final(std::move(records), config.masked_unique_min);
    std::sort(records.begin(), records.end(), record_less);
    return records;
}

std::vector<SDRecord> run(const Genome& genome, const RunConfig& config, RunStats* stats) {
    config.validate();
    RunStats local;
    auto regions = find_regions(genome, config, &local);
    std::vector<std::vector<SDRecord>> per_region(regions.size());
    std::vector<RegionOutcome> outcomes(regions.size());
    parallel_for(regions.size(), config.threads, [&](std::size_t x) {
        per_region[x] = process_region(genome, regions[x], config, &outcomes[x]);
    });
    std::vector<SDRecord> raw;
    for (std::size_t x = 0; x < regions.size(); ++x) {
        local.regions_passing_qgram += outcomes[x].passed_qgram;
        local.chains += outcomes[x].chains;
        for (auto& r : per_region[x]) raw.push_back(std::move(r));
    }
    local.raw_records = raw.size();
    auto records = finalize_records(std::move(raw), config);
    local.records = records.size();
    if (stats) *stats = local;
    return records;
}

Validation validate_record(const Genome& genome, const SDRecord& r, double delta, const AlignParams& params) {
    auto fail = [](std::string why) { return Validation{false, std::move(why)}; };
    for (const auto* m : {&r.mate1, &r.mate2}) {
        auto s = genome.find(m->seq_name);
        if (!s) return fail("unknown sequence " + m->seq_name);
        if (!(m->start < m->end && m->end <= genome[*s].length())) return fail("mate outside its sequence");
    }
    if (position_less(r.mate2, r.mate1)) return fail("mates not in canonical order");
    if (r.mate1.strand != Strand::forward) return fail("mate1 not on the forward strand");
    Cigar cigar;
    try {
        cigar = parse_cigar(r.cigar);
    } catch (const std::invalid_argument& e) {
        return fail(e.what());
    }
    if (reference_length(cigar) != r.mate1.length()) return fail("CIGAR reference length differs from mate1");
    if (query_length(cigar) != r.mate2.length()) return fail("CIGAR query length differs from mate2");
    const auto s1 = oriented_bases(genome, r.mate1);
    const auto s2 = oriented_bases(genome, r.mate2);
    const auto aln = score_cigar(cigar, s1, s2, params);
    if (aln.aligned_length != r.alignment_length) return fail("alignment length mismatch");
    if (aln.edit_distance() != r.edit_distance) return fail("edit distance mismatch");
    if (std::abs(aln.error_total() - r.error_total) > 1e-9) return fail("error_total mismatch");
    if (aln.aligned_length < 1000) return fail("alignment shorter than 1000");
    if (aln.error_total() > delta + 1e-12) return fail("error above delta");
    if (!overlap_ok(r, delta)) return fail("mates overlap by more than delta");
    return {};
}

} // namespace sdscan
