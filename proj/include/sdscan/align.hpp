#pragma once

#include "sdscan/chain.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sdscan {

/// Thrown when an alignment would need more DP cells than allowed.
class ResourceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct AlignParams {
    int match = 5;
    int mismatch = 4;   ///< penalty, subtracted
    int gap_open = 40;  ///< charged once per gap
    int gap_extend = 1; ///< charged per gap base, so a gap of L costs open + L * extend
    std::optional<std::uint64_t> band;
    std::uint64_t max_cells = 400'000'000;

    void validate() const {
        if (match <= 0) throw std::invalid_argument("match score must be positive");
        if (mismatch < 0 || gap_open < 0 || gap_extend < 0) throw std::invalid_argument("penalties must be >= 0");
    }
};

enum class CigarOp : char { match = 'M', insertion = 'I', deletion = 'D' };

struct CigarRun {
    CigarOp op;
    std::uint64_t count;

    friend bool operator==(const CigarRun&, const CigarRun&) = default;
};

using Cigar = std::vector<CigarRun>;

/// I consumes the query (s2) only, D the reference (s1) only.
struct Alignment {
    Cigar cigar;
    std::int64_t score = 0;
    std::uint64_t matches = 0;
    std::uint64_t mismatches = 0;
    std::uint64_t gap_bases = 0;
    std::uint64_t gap_opens = 0;
    std::uint64_t aligned_length = 0;
    /// Share of gap bases in gaps of at most `short_gap` bases.
    std::uint64_t short_gap_bases = 0;

    std::uint64_t edit_distance() const { return mismatches + gap_bases; }
    double error_total() const;
    double error_mutation() const;
    double error_gap() const;
};

inline constexpr std::uint64_t kShortGap = 5;

std::string cigar_string(const Cigar& cigar);
Cigar parse_cigar(std::string_view text);
/// Merges adjacent runs of the same op and drops empty runs.
Cigar normalize(const Cigar& cigar);
std::uint64_t reference_length(const Cigar& cigar);
std::uint64_t query_length(const Cigar& cigar);
/// Swaps I and D, turning an alignment of (s1, s2) into one of (s2, s1).
Cigar swap_roles(const Cigar& cigar);

/// Recomputes all counts and the score of `cigar` over (s1, s2).
/// Throws std::invalid_argument when the CIGAR does not consume both strings exactly.
Alignment score_cigar(const Cigar& cigar, std::string_view s1, std::string_view s2, const AlignParams& params);

/// Optimal affine-gap global alignment (Gotoh). Ties prefer M, then D, then I.
/// With a band, diagonals outside it are not explored; while a path through
/// the band edge could still beat the banded optimum, the band is doubled.
Alignment global_align(std::string_view s1, std::string_view s2, const AlignParams& params = {});

/// Diagonal band used when `band` is unset and the matrix is too large to fill.
std::uint64_t auto_band(std::string_view s1, std::string_view s2);

/// Alignment used for reported records: unbanded up to `full_cells` DP
/// cells, otherwise banded with auto_band. Depends only on the inputs.
Alignment record_alignment(std::string_view s1, std::string_view s2, const AlignParams& params = {},
                           std::uint64_t full_cells = 25'000'000);

struct ChainAlignOptions {
    AlignParams params;
    /// Chain ends are extended outward until the score drops this far below its best.
    std::int64_t x_drop = 1000;
};

/// Alignment of s1/s2 along a chain: anchors as M runs, gaps filled with
/// global_align, ends extended by x-drop. The result covers
/// [ref_begin, ref_end) of s1 and [query_begin, query_end) of s2.
struct ChainAlignment {
    Alignment alignment;
    std::uint64_t ref_begin = 0, ref_end = 0;
    std::uint64_t query_begin = 0, query_end = 0;
};
ChainAlignment align_chain(const Chain& chain, std::string_view s1, std::string_view s2,
                           const ChainAlignOptions& options = {});

/// Kimura two-parameter distance over M columns with ACGT on both sides;
/// +inf when saturated.
double kimura_distance(const Alignment& aln, std::string_view s1, std::string_view s2);
double kimura_from_rates(double p, double q);

/// Jukes-Cantor distance with p = mismatches / M columns; +inf when saturated.
double jukes_cantor(const Alignment& aln);
double jukes_cantor_from_p(double p);

} // namespace sdscan
