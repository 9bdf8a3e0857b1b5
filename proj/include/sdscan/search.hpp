#pragma once

#include "sdscan/genome_io.hpp"
#include "sdscan/sketch.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace sdscan {

/// Error budget of an SD: small mutations (delta_m) plus large gaps (delta - delta_m).
struct ErrorModel {
    double delta = 0.25;
    double delta_m = 0.15;
    double p_gap = 0.005;

    double delta_g() const { return delta - delta_m; }

    void validate() const {
        if (!(delta_m >= 0 && delta_m <= delta && delta < 1))
            throw std::invalid_argument("error model requires 0 <= delta_m <= delta < 1");
        if (!(p_gap >= 0 && p_gap < 1)) throw std::invalid_argument("p_gap must be in [0, 1)");
    }

    static ErrorModel from_budgets(double delta_m, double delta_g, double p_gap = 0.005) {
        return ErrorModel{delta_m + delta_g, delta_m, p_gap};
    }
};

/// Minimum expected Jaccard similarity of k-mer sets of two segments that
/// satisfy the error model: ((1-dG)/(1+dG)) / (2 e^{k dM} - 1).
double tau(int k, const ErrorModel& model);

/// Probability that a k-mer carries no small mutation: e^{-k dM}.
double kmer_survival(int k, double delta_m);

/// Minimum number of shared q-grams for two segments conforming to the model,
/// n = length of the shorter one.
double qgram_threshold(std::uint64_t n, int q, const ErrorModel& model);

/// Sum over q-grams g of min(count_s1(g), count_s2(g)); q-grams with N are skipped.
std::uint64_t shared_qgrams(std::string_view s1, std::string_view s2, int q);

bool qgram_accept(std::string_view s1, std::string_view s2, int q, const ErrorModel& model);

/// Coordinates of a query genome and a target that is either the same
/// genome or its per-sequence reverse complement.
struct SearchSpace {
    const Genome& query;
    const Genome& target;
    const MinimizerIndex& query_index;
    const MinimizerIndex& target_index;
    Strand strand = Strand::forward;
};

/// Seed pair of windows: query [i, i+n), target [j, j+m) in global
/// coordinates of the query and target genomes respectively.
struct SeedSD {
    std::uint64_t i = 0;
    std::uint64_t j = 0;
    std::uint64_t n = 0;
    std::uint64_t m = 0;
    double estimate = 0;
    Strand strand = Strand::forward;

    friend bool operator==(const SeedSD&, const SeedSD&) = default;
};

struct SeedOptions {
    std::uint64_t window = 750;
    /// Advance of the query window; 0 means window / 2.
    std::uint64_t stride = 0;
    unsigned threads = 1;
};

/// Global-coordinate hashes of the index entries inside [begin, end).
std::vector<std::uint64_t> window_hashes(const MinimizerIndex& index, std::uint64_t begin, std::uint64_t end);

struct RollStep {
    std::uint64_t j;      ///< first target window start with this state
    std::uint64_t next;   ///< state holds for j' in [j, next)
    std::size_t shared;
    std::size_t sketch;
    double estimate;
};

/// Rolls a target window of length m over starts [j_begin, j_end] against a
/// fixed query window [i, i+n), reporting the winnowed MinHash estimate each
/// time the target window gains or loses a minimizer.
void roll_candidates(const MinimizerIndex& query_index, std::uint64_t i, std::uint64_t n,
                     const MinimizerIndex& target_index, std::uint64_t j_begin, std::uint64_t j_end,
                     std::uint64_t m, const std::function<void(const RollStep&)>& visit);

/// All seed SDs of the search space; output sorted by (i, j).
std::vector<SeedSD> find_seed_sds(const SearchSpace& space, const ErrorModel& model, const SeedOptions& options);

/// Forward self-search of a genome against its own seed-mode index.
std::vector<SeedSD> find_seed_sds(const MinimizerIndex& index, const Genome& genome, const ErrorModel& model,
                                  std::uint64_t n);

/// Candidate SD region pair. Intervals are forward-strand coordinates;
/// region2.strand is reverse for inverted pairs.
struct PotentialRegion {
    Interval region1;
    Interval region2;
    Strand strand = Strand::forward;
    double estimate = 0;
    bool padded = false;
};

/// Pair of windows in search-space coordinates (query global, target global).
struct RegionCoords {
    std::uint64_t begin1 = 0, end1 = 0;
    std::uint64_t begin2 = 0, end2 = 0;
    double estimate = 0;

    bool contains(const SeedSD& s) const {
        return begin1 <= s.i && s.i + s.n <= end1 && begin2 <= s.j && s.j + s.m <= end2;
    }
};

struct ExtendOptions {
    /// Extension continues this many bases past the last position with an
    /// estimate >= tau before giving up; 0 means the seed window length.
    std::uint64_t slack = 0;
    std::uint64_t max_length = 1'000'000;
};

/// Grows a seed forward then backward over the full (unmasked) indexes of
/// `space` while the winnowed MinHash estimate stays at or above tau.
RegionCoords extend_seed(const SearchSpace& space, const SeedSD& seed, const ErrorModel& model,
                         const ExtendOptions& options = {});

/// Overlap of the two windows in forward coordinates (0 across sequences).
std::uint64_t pair_overlap(const SearchSpace& space, const RegionCoords& r);

/// Converts search-space coordinates into forward intervals.
PotentialRegion to_potential_region(const SearchSpace& space, const RegionCoords& r);

/// min(5000, ceil(0.25 * length)) on both sides, clamped to the sequence and
/// to `max_length` in total.
Interval pad_interval(const Genome& genome, const Interval& iv, std::uint64_t max_length = 1'000'000);
PotentialRegion pad_region(const Genome& genome, PotentialRegion r, std::uint64_t max_length = 1'000'000);

/// Unions regions of the same strand whose intervals overlap on both mates,
/// as long as neither merged interval exceeds `max_length`. Output is sorted.
std::vector<PotentialRegion> merge_regions(std::vector<PotentialRegion> regions,
                                           std::uint64_t max_length = 1'000'000);

/// Tab-separated checkpoint: chrom1 start1 end1 chrom2 start2 end2 strand estimate.
void write_regions(const std::vector<PotentialRegion>& regions, std::ostream& out);
std::vector<PotentialRegion> read_regions(std::istream& in);

} // namespace sdscan
