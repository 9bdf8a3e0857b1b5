#pragma once

#include "sdscan/align.hpp"
#include "sdscan/chain.hpp"
#include "sdscan/genome_io.hpp"
#include "sdscan/search.hpp"
#include "sdscan/sketch.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sdscan {

struct RunConfig {
    ErrorModel model;
    SketchParams seed_sketch;
    int anchor_k = 11;
    std::size_t anchor_max_occurrences = 1000;
    int q = 5;
    bool qgram_filter = true;
    std::uint64_t seed_window = 750;
    std::uint64_t max_region = 1'000'000;
    ChainScoring chain;
    AlignParams align;
    std::int64_t x_drop = 1000;
    unsigned threads = 1;
    std::uint64_t masked_unique_min = 100;
    double reciprocal_overlap = 0.8;
    bool reverse_strand = true;
    /// Seeds are extended in batches of this size; a seed inside a region
    /// found by an earlier batch is skipped.
    std::size_t batch_size = 32;
    /// Directory for index files and the potential-region dump.
    std::optional<std::string> checkpoint_dir;

    void validate() const;
};

struct RunStats {
    std::size_t seeds = 0;
    std::size_t extended = 0;
    std::size_t regions = 0;
    std::size_t regions_passing_qgram = 0;
    std::size_t chains = 0;
    std::size_t raw_records = 0;
    std::size_t records = 0;
    bool regions_from_checkpoint = false;
};

/// Full search on both strands; output sorted by record_less.
std::vector<SDRecord> run(const Genome& genome, const RunConfig& config, RunStats* stats = nullptr);

/// Potential SD regions (padded, deduplicated) from seeding and extension.
std::vector<PotentialRegion> find_regions(const Genome& genome, const RunConfig& config, RunStats* stats = nullptr);

struct RegionOutcome {
    bool passed_qgram = false;
    std::size_t chains = 0;
};

/// Chains, aligns and reports one region pair. A chain whose alignment is
/// above delta or whose mates overlap too much is split at its widest gap.
/// Records are canonical but not otherwise filtered.
std::vector<SDRecord> process_region(const Genome& genome, const PotentialRegion& region, const RunConfig& config,
                                     RegionOutcome* outcome = nullptr);

/// Substring of `iv` in its own orientation (reverse-complemented for '-').
std::string oriented_bases(const Genome& genome, const Interval& iv);

/// Builds a record for mates (a, b) by aligning their oriented substrings
/// with record_alignment. Mates are put in canonical order first.
SDRecord make_record(const Genome& genome, Interval a, Interval b, const AlignParams& params);

/// Builds a record from an existing alignment of the oriented substrings of
/// a and b (I consumes b). Mates and CIGAR are put in canonical order.
SDRecord make_record(const Genome& genome, const Interval& a, const Interval& b, const Cigar& cigar,
                     const AlignParams& params);

/// Orders mates so that mate1 < mate2 by (name, start, end) and mate1 is
/// on '+', rewriting the CIGAR to match.
SDRecord canonicalize(SDRecord r);

/// Drops records where either mate has fewer than masked_unique_min unmasked bases.
std::vector<SDRecord> filter_final(std::vector<SDRecord> records, std::uint64_t masked_unique_min);

/// Removes exact duplicates, records contained in a larger record and
/// records with reciprocal overlap >= `reciprocal` on both mates.
std::vector<SDRecord> remove_redundant(std::vector<SDRecord> records, double reciprocal);

/// All final filters in order: SD conditions, redundancy, masked filter.
std::vector<SDRecord> finalize_records(std::vector<SDRecord> records, const RunConfig& config);

struct Validation {
    bool ok = true;
    std::string reason;
};

/// Re-checks a record from its CIGAR: coordinates, consumption, error,
/// length >= 1000, overlap and canonical order.
Validation validate_record(const Genome& genome, const SDRecord& record, double delta,
                           const AlignParams& params = {});

} // namespace sdscan
