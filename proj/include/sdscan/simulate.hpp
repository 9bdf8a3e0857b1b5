#pragma once

#include "sdscan/genome_io.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace sdscan {

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic generator for instance `index` of a run seeded with `seed`.
std::mt19937_64 instance_rng(std::uint64_t seed, std::uint64_t index);

std::string random_bases(std::mt19937_64& rng, std::uint64_t length);

/// One edit of a mutation script, in coordinates of the original segment.
struct Edit {
    enum class Kind { substitute, insert, erase };
    Kind kind = Kind::substitute;
    std::uint64_t pos = 0;
    std::string bases;       ///< substitute: one base; insert: inserted bases
    std::uint64_t length = 0; ///< erase: number of deleted bases
    bool large = false;      ///< drawn from the gap budget rather than the mutation budget

    friend bool operator==(const Edit&, const Edit&) = default;
};

/// Applies `script` (sorted by position) to `original`.
std::string replay(std::string_view original, const std::vector<Edit>& script);

struct TruthRecord {
    Interval original;
    Interval copy; ///< strand reverse when the copy is inverted
    double target_delta = 0;
    double scripted_delta_m = 0;
    double scripted_delta_g = 0;
    std::vector<Edit> mutation_script;
};

struct MutationBudget {
    double delta_m = 0;
    double delta_g = 0;
    double p_gap = 0.005;
};

/// Draws a mutation script for `original`. Small events
/// (90% substitutions, 10% indels of 1-5 bp) arrive at rate delta_m / 1.2 per
/// base and never exceed round(delta_m * length) edited bases; large gaps
/// have log-uniform lengths in [50, 10000] and consume up to
/// floor(delta_g * length) bases in at most max(1, floor(p_gap * length))
/// events, each placed at least max(50, its length) bases from both ends of
/// the segment. A remainder under 50 bases is left unused.
std::vector<Edit> draw_script(std::mt19937_64& rng, std::string_view original, const MutationBudget& budget);

/// Realized (mutation, gap) error fractions of a script relative to its
/// alignment length (original length plus inserted bases).
std::pair<double, double> script_fractions(std::uint64_t length, const std::vector<Edit>& script);

struct SimConfig {
    std::uint64_t min_backbone = 5'000;
    std::uint64_t max_backbone = 50'000;
    std::uint64_t min_sd = 1'000;
    std::uint64_t max_sd = 10'000;
    double delta = 0.1;
    /// Unset budgets are drawn per instance: delta_m ~ U(max(0, delta - 0.15),
    /// min(0.15, delta)) and delta_g = min(0.15, delta - delta_m).
    std::optional<double> delta_m;
    std::optional<double> delta_g;
    double p_gap = 0.005;
    double inverted_fraction = 0.0;
    std::uint64_t rng_seed = 1;
    std::uint64_t count = 1;

    void validate() const;
};

struct SimPair {
    Genome genome;
    TruthRecord truth;
};

/// Instance `index` of the configuration: a random backbone carrying one SD.
SimPair simulate_pair(const SimConfig& config, std::uint64_t index = 0);

struct GenomeSimConfig {
    std::uint64_t sequences = 2;
    std::uint64_t total_length = 2'000'000;
    std::uint64_t sds = 50;
    std::uint64_t min_sd = 1'000;
    std::uint64_t max_sd = 20'000;
    double min_delta = 0.01;
    double max_delta = 0.25;
    double p_gap = 0.005;
    double inverted_fraction = 0.3;
    std::uint64_t rng_seed = 1;
};

struct SimGenome {
    Genome genome;
    std::vector<TruthRecord> truths;
};

/// Random genome with `sds` planted duplications whose originals and copies
/// are pairwise disjoint; copies may land on a different sequence.
SimGenome simulate_genome(const GenomeSimConfig& config);

/// Fraction of `truth` covered by `call`, 0 on different sequences.
double coverage(const Interval& truth, const Interval& call);

/// True iff some call covers more than `min_coverage` of both truth intervals.
bool score_detection(const TruthRecord& truth, const std::vector<SDRecord>& calls, double min_coverage = 0.95);

/// Truth BEDPE: 10 BEDPE columns then target_delta, scripted_delta_m, scripted_delta_g.
void write_truth(const std::vector<TruthRecord>& truths, std::ostream& out);
std::vector<TruthRecord> read_truth(std::istream& in);

} // namespace sdscan
