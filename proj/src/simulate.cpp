#include "sdscan/simulate.hpp"

#include "sdscan/dna.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sdscan {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 instance_rng(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ index));
}

std::string random_bases(std::mt19937_64& rng, std::uint64_t length) {
    static constexpr char kBases[] = "ACGT";
    std::string s(length, 'A');
    std::uniform_int_distribution<int> pick(0, 3);
    for (auto& c : s) c = kBases[pick(rng)];
    return s;
}

namespace {

template <typename T>
T uniform_int(std::mt19937_64& rng, T lo, T hi) {
    return std::uniform_int_distribution<T>(lo, hi)(rng);
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
    if (hi <= lo) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

char other_base(std::mt19937_64& rng, char b) {
    static constexpr char kBases[] = "ACGT";
    char c;
    do c = kBases[uniform_int(rng, 0, 3)];
    while (c == b);
    return c;
}

int kind_rank(Edit::Kind k) { return k == Edit::Kind::insert ? 0 : 1; }

/// Half-open deletion intervals kept sorted.
struct Deletions {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;

    bool overlaps(std::uint64_t b, std::uint64_t e) const {
        for (auto [x, y] : spans)
            if (b < y && x < e) return true;
        return false;
    }
    bool strictly_inside(std::uint64_t p) const {
        for (auto [x, y] : spans)
            if (x < p && p < y) return true;
        return false;
    }
    /// End of the deletion covering p, or p when none does.
    std::uint64_t skip(std::uint64_t p) const {
        for (auto [x, y] : spans)
            if (x <= p && p < y) return y;
        return p;
    }
    void add(std::uint64_t b, std::uint64_t e) {
        spans.emplace_back(b, e);
        std::sort(spans.begin(), spans.end());
    }
};

} // namespace

std::vector<Edit> draw_script(std::mt19937_64& rng, std::string_view original, const MutationBudget& budget) {
    const std::uint64_t len = original.size();
    std::vector<Edit> edits;
    Deletions dels;
    std::vector<std::uint64_t> large_inserts;

    const auto gap_budget = static_cast<std::uint64_t>(std::floor(budget.delta_g * static_cast<double>(len) + 1e-9));
    const auto max_events =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(budget.p_gap * static_cast<double>(len))));
    std::uint64_t used = 0;
    for (std::uint64_t e = 0; e < max_events && used < gap_budget; ++e) {
        auto size = static_cast<std::uint64_t>(std::llround(std::exp(uniform_real(rng, std::log(50.0), std::log(10000.0)))));
        if (e + 1 == max_events || used + size > gap_budget) size = std::min<std::uint64_t>(gap_budget - used, 10000);
        if (size < 50) break;
        // Large events stay at least their own length away from both ends.
        const auto flank = std::max<std::uint64_t>(50, size);
        bool placed = false;
        if (uniform_int(rng, 0, 1) == 0 && size + 2 * flank <= len) {
            for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
                auto p = uniform_int<std::uint64_t>(rng, flank, len - size - flank);
                if (dels.overlaps(p, p + size)) continue;
                bool cuts_insert = std::any_of(large_inserts.begin(), large_inserts.end(),
                                               [&](std::uint64_t q) { return p < q && q < p + size; });
                if (cuts_insert) continue;
                dels.add(p, p + size);
                edits.push_back({Edit::Kind::erase, p, {}, size, true});
                placed = true;
            }
        }
        if (!placed) {
            std::uint64_t p;
            const auto lo = std::min(flank, len / 2), hi = len - lo;
            do p = uniform_int<std::uint64_t>(rng, lo, hi);
            while (dels.strictly_inside(p));
            large_inserts.push_back(p);
            edits.push_back({Edit::Kind::insert, p, random_bases(rng, size), 0, true});
        }
        used += size;
    }

    const auto cap = static_cast<std::uint64_t>(std::llround(budget.delta_m * static_cast<double>(len)));
    std::bernoulli_distribution event(std::clamp(budget.delta_m / 1.2, 0.0, 1.0));
    std::uint64_t small = 0;
    std::uint64_t p = 0;
    while (p < len && small < cap) {
        const auto q = dels.skip(p);
        if (q != p) {
            p = q;
            continue;
        }
        if (!event(rng)) {
            ++p;
            continue;
        }
        if (uniform_real(rng, 0.0, 1.0) < 0.9) {
            edits.push_back({Edit::Kind::substitute, p, std::string(1, other_base(rng, original[p])), 0, false});
            ++small;
            ++p;
            continue;
        }
        const auto size = std::min<std::uint64_t>(uniform_int<std::uint64_t>(rng, 1, 5), cap - small);
        if (uniform_int(rng, 0, 1) == 0) {
            edits.push_back({Edit::Kind::insert, p, random_bases(rng, size), 0, false});
            small += size;
            ++p;
            continue;
        }
        const bool fits = p + size <= len && !dels.overlaps(p, p + size) &&
                          std::none_of(large_inserts.begin(), large_inserts.end(),
                                       [&](std::uint64_t x) { return p < x && x < p + size; });
        if (!fits) {
            ++p;
            continue;
        }
        edits.push_back({Edit::Kind::erase, p, {}, size, false});
        small += size;
        p += size;
    }

    std::stable_sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) {
        if (a.pos != b.pos) return a.pos < b.pos;
        return kind_rank(a.kind) < kind_rank(b.kind);
    });
    return edits;
}

std::string replay(std::string_view original, const std::vector<Edit>& script) {
    std::string out;
    out.reserve(original.size());
    std::uint64_t cursor = 0;
    for (const auto& e : script) {
        if (e.pos < cursor || e.pos > original.size()) throw std::invalid_argument("mutation script out of order");
        out.append(original.substr(cursor, e.pos - cursor));
        cursor = e.pos;
        switch (e.kind) {
        case Edit::Kind::substitute:
            out += e.bases;
            cursor = e.pos + 1;
            break;
        case Edit::Kind::insert:
            out += e.bases;
            break;
        case Edit::Kind::erase:
            cursor = e.pos + e.length;
            break;
        }
        if (cursor > original.size()) throw std::invalid_argument("mutation script runs past the segment");
    }
    out.append(original.substr(cursor));
    return out;
}

std::pair<double, double> script_fractions(std::uint64_t length, const std::vector<Edit>& script) {
    std::uint64_t l = length, m = 0, g = 0;
    for (const auto& e : script) {
        const std::uint64_t bases = e.kind == Edit::Kind::erase ? e.length : e.bases.size();
        if (e.kind == Edit::Kind::insert) l += bases;
        (e.large ? g : m) += bases;
    }
    if (l == 0) return {0.0, 0.0};
    return {static_cast<double>(m) / static_cast<double>(l), static_cast<double>(g) / static_cast<double>(l)};
}

void SimConfig::validate() const {
    if (min_backbone == 0 || min_backbone > max_backbone) throw std::invalid_argument("bad backbone length range");
    if (min_sd == 0 || min_sd > max_sd) throw std::invalid_argument("bad SD length range");
    if (!(delta >= 0 && delta < 1)) throw std::invalid_argument("delta must be in [0, 1)");
    if (delta_m && (*delta_m < 0 || *delta_m > std::min(0.15, delta) + 1e-12))
        throw std::invalid_argument("delta_m must be in [0, min(0.15, delta)]");
    if (delta_g && (*delta_g < 0 || *delta_g > std::min(0.15, delta) + 1e-12))
        throw std::invalid_argument("delta_g must be in [0, min(0.15, delta)]");
    if (!(inverted_fraction >= 0 && inverted_fraction <= 1)) throw std::invalid_argument("bad inverted fraction");
}

namespace {

MutationBudget draw_budget(std::mt19937_64& rng, double delta, std::optional<double> dm, std::optional<double> dg,
                           double p_gap) {
    MutationBudget b;
    b.p_gap = p_gap;
    b.delta_m = dm ? *dm : uniform_real(rng, std::max(0.0, delta - 0.15), std::min(0.15, delta));
    b.delta_g = dg ? *dg : std::clamp(std::min(0.15, delta - b.delta_m), 0.0, 0.15);
    return b;
}

struct Planted {
    std::string copy;
    std::vector<Edit> script;
    bool inverted;
    MutationBudget budget;
};

Planted plant(std::mt19937_64& rng, std::string_view original, const MutationBudget& budget,
              double inverted_fraction) {
    Planted p;
    p.budget = budget;
    p.script = draw_script(rng, original, budget);
    p.copy = replay(original, p.script);
    p.inverted = std::bernoulli_distribution(inverted_fraction)(rng);
    if (p.inverted) p.copy = reverse_complement(p.copy);
    return p;
}

TruthRecord make_truth(const std::string& name1, std::uint64_t o, std::uint64_t len, const std::string& name2,
                       std::uint64_t c, const Planted& p) {
    TruthRecord t;
    t.original = {name1, o, o + len, Strand::forward};
    t.copy = {name2, c, c + p.copy.size(), p.inverted ? Strand::reverse : Strand::forward};
    t.target_delta = p.budget.delta_m + p.budget.delta_g;
    auto [m, g] = script_fractions(len, p.script);
    t.scripted_delta_m = m;
    t.scripted_delta_g = g;
    t.mutation_script = p.script;
    return t;
}

Sequence plain_sequence(std::string name, std::string bases) {
    Sequence s;
    s.name = std::move(name);
    s.mask.assign(bases.size(), false);
    s.bases = std::move(bases);
    return s;
}

} // namespace

SimPair simulate_pair(const SimConfig& config, std::uint64_t index) {
    config.validate();
    auto rng = instance_rng(config.rng_seed, index);
    const auto budget = draw_budget(rng, config.delta, config.delta_m, config.delta_g, config.p_gap);
    const auto backbone_len = uniform_int(rng, config.min_backbone, config.max_backbone);
    const auto fit = static_cast<std::uint64_t>(static_cast<double>(backbone_len) / (2.0 * (1.0 + config.delta)));
    const auto max_sd = std::min(config.max_sd, fit);
    if (max_sd < config.min_sd) throw std::invalid_argument("backbone too short for the requested SD length");
    const auto len = uniform_int(rng, config.min_sd, max_sd);

    auto backbone = random_bases(rng, backbone_len);
    // Any copy is at most len * (1 + delta) long; keep room for it on one side.
    const auto room = static_cast<std::uint64_t>(std::ceil(static_cast<double>(len) * (1.0 + config.delta))) + 1;
    std::uint64_t o;
    do o = uniform_int<std::uint64_t>(rng, 0, backbone_len - len);
    while (o < room && backbone_len - o - len < room);
    auto planted = plant(rng, std::string_view(backbone).substr(o, len), budget, config.inverted_fraction);
    const auto clen = planted.copy.size();

    // Copy slots [c, c + clen) left of the original, then right of it.
    const std::uint64_t left = o >= clen ? o - clen + 1 : 0;
    const std::uint64_t right = backbone_len >= o + len + clen ? backbone_len - (o + len + clen) + 1 : 0;
    if (left + right == 0) throw std::invalid_argument("no room to place the copy");
    auto slot = uniform_int<std::uint64_t>(rng, 0, left + right - 1);
    const std::uint64_t c = slot < left ? slot : o + len + (slot - left);
    std::copy(planted.copy.begin(), planted.copy.end(), backbone.begin() + static_cast<std::ptrdiff_t>(c));

    SimPair out;
    const std::string name = "sim" + std::to_string(index);
    out.genome.add(plain_sequence(name, std::move(backbone)));
    out.truth = make_truth(name, o, len, name, c, planted);
    return out;
}

SimGenome simulate_genome(const GenomeSimConfig& config) {
    if (config.sequences == 0 || config.total_length < config.sequences * 2 * config.max_sd)
        throw std::invalid_argument("genome too small for the requested SDs");
    auto rng = instance_rng(config.rng_seed, 0);
    std::vector<std::string> names;
    std::vector<std::string> seqs;
    for (std::uint64_t s = 0; s < config.sequences; ++s) {
        auto len = config.total_length / config.sequences;
        if (s + 1 == config.sequences) len += config.total_length % config.sequences;
        names.push_back("chr" + std::to_string(s + 1));
        seqs.push_back(random_bases(rng, len));
    }
    std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> used(config.sequences);
    constexpr std::uint64_t kMargin = 1000;
    auto free_slot = [&](std::uint64_t length, std::uint64_t& seq, std::uint64_t& pos) {
        for (int attempt = 0; attempt < 10000; ++attempt) {
            seq = uniform_int<std::uint64_t>(rng, 0, config.sequences - 1);
            if (seqs[seq].size() < length) continue;
            pos = uniform_int<std::uint64_t>(rng, 0, seqs[seq].size() - length);
            bool clash = std::any_of(used[seq].begin(), used[seq].end(), [&](auto iv) {
                return pos < iv.second + kMargin && iv.first < pos + length + kMargin;
            });
            if (!clash) return;
        }
        throw std::invalid_argument("could not place all SDs; genome too crowded");
    };

    SimGenome out;
    for (std::uint64_t k = 0; k < config.sds; ++k) {
        const double delta = uniform_real(rng, config.min_delta, config.max_delta);
        const auto budget = draw_budget(rng, delta, std::nullopt, std::nullopt, config.p_gap);
        const auto len = uniform_int(rng, config.min_sd, config.max_sd);
        std::uint64_t sa = 0, o = 0;
        free_slot(len, sa, o);
        used[sa].emplace_back(o, o + len);
        auto planted = plant(rng, std::string_view(seqs[sa]).substr(o, len), budget, config.inverted_fraction);
        std::uint64_t sb = 0, c = 0;
        free_slot(planted.copy.size(), sb, c);
        used[sb].emplace_back(c, c + planted.copy.size());
        std::copy(planted.copy.begin(), planted.copy.end(), seqs[sb].begin() + static_cast<std::ptrdiff_t>(c));
        out.truths.push_back(make_truth(names[sa], o, len, names[sb], c, planted));
    }
    for (std::uint64_t s = 0; s < config.sequences; ++s) out.genome.add(plain_sequence(names[s], std::move(seqs[s])));
    return out;
}

double coverage(const Interval& truth, const Interval& call) {
    if (truth.length() == 0) return 0.0;
    return static_cast<double>(overlap_length(truth, call)) / static_cast<double>(truth.length());
}

bool score_detection(const TruthRecord& truth, const std::vector<SDRecord>& calls, double min_coverage) {
    for (const auto& c : calls) {
        if (coverage(truth.original, c.mate1) > min_coverage && coverage(truth.copy, c.mate2) > min_coverage)
            return true;
        if (coverage(truth.original, c.mate2) > min_coverage && coverage(truth.copy, c.mate1) > min_coverage)
            return true;
    }
    return false;
}

void write_truth(const std::vector<TruthRecord>& truths, std::ostream& out) {
    for (std::size_t x = 0; x < truths.size(); ++x) {
        const auto& t = truths[x];
        out << t.original.seq_name << '\t' << t.original.start << '\t' << t.original.end << '\t' << t.copy.seq_name
            << '\t' << t.copy.start << '\t' << t.copy.end << "\tsd" << x << "\t0\t" << strand_char(t.original.strand)
            << '\t' << strand_char(t.copy.strand) << '\t' << format_double(t.target_delta) << '\t'
            << format_double(t.scripted_delta_m) << '\t' << format_double(t.scripted_delta_g) << '\n';
    }
}

std::vector<TruthRecord> read_truth(std::istream& in) {
    std::vector<TruthRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        TruthRecord t;
        std::string name, score, s1, s2;
        if (!(ss >> t.original.seq_name >> t.original.start >> t.original.end >> t.copy.seq_name >> t.copy.start >>
              t.copy.end >> name >> score >> s1 >> s2 >> t.target_delta >> t.scripted_delta_m >> t.scripted_delta_g))
            throw ParseError("malformed truth line", lineno);
        if ((s1 != "+" && s1 != "-") || (s2 != "+" && s2 != "-")) throw ParseError("bad strand", lineno);
        t.original.strand = s1 == "+" ? Strand::forward : Strand::reverse;
        t.copy.strand = s2 == "+" ? Strand::forward : Strand::reverse;
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace sdscan
