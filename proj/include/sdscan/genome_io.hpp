#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sdscan {

enum class Strand : char { forward = '+', reverse = '-' };

inline char strand_char(Strand s) { return static_cast<char>(s); }

class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// One named sequence. `bases` is upper-case over {A,C,G,T,N}; mask[i] is true
/// when base i was soft-masked (lower-case) in the input.
struct Sequence {
    std::string name;
    std::string bases;
    std::vector<bool> mask;

    std::uint64_t length() const { return bases.size(); }
};

/// Ordered collection of sequences addressed either by (index, local offset)
/// or by a global offset into the concatenation of all sequences.
class Genome {
  public:
    /// Throws std::invalid_argument on duplicate names, mask/bases length
    /// mismatch or bases outside {A,C,G,T,N}.
    void add(Sequence seq);

    std::size_t size() const { return seqs_.size(); }
    bool empty() const { return seqs_.empty(); }
    const Sequence& operator[](std::size_t i) const { return seqs_[i]; }
    auto begin() const { return seqs_.begin(); }
    auto end() const { return seqs_.end(); }

    std::optional<std::size_t> find(std::string_view name) const;

    std::uint64_t offset(std::size_t i) const { return offsets_[i]; }
    std::uint64_t total_length() const { return total_; }

    /// Index of the sequence containing global offset `pos`.
    std::size_t locate(std::uint64_t pos) const;

    std::uint64_t masked_count(std::size_t seq, std::uint64_t begin, std::uint64_t end) const;

    /// Every sequence reverse-complemented in place; names, order and
    /// offsets are preserved so global coordinates line up per sequence.
    Genome reverse_complement() const;

  private:
    std::vector<Sequence> seqs_;
    std::vector<std::uint64_t> offsets_;
    std::unordered_map<std::string, std::size_t> by_name_;
    std::uint64_t total_ = 0;
};

/// 0-based half-open interval on a named sequence.
struct Interval {
    std::string seq_name;
    std::uint64_t start = 0;
    std::uint64_t end = 0;
    Strand strand = Strand::forward;

    std::uint64_t length() const { return end - start; }

    /// Ordering used for canonical pair orientation: (name, start, end).
    friend bool position_less(const Interval& a, const Interval& b) {
        if (a.seq_name != b.seq_name) return a.seq_name < b.seq_name;
        if (a.start != b.start) return a.start < b.start;
        return a.end < b.end;
    }
    friend bool operator==(const Interval&, const Interval&) = default;
};

std::uint64_t overlap_length(const Interval& a, const Interval& b);

/// A reported segmental duplication.
struct SDRecord {
    Interval mate1;
    Interval mate2;
    std::uint64_t alignment_length = 0;
    std::uint64_t edit_distance = 0;
    double error_total = 0;
    double error_mutation = 0;
    double error_gap = 0;
    std::string cigar;
    double kimura = 0;
    double jukes_cantor = 0;
    double masked_fraction1 = 0;
    double masked_fraction2 = 0;

    Strand relative_strand() const {
        return mate1.strand == mate2.strand ? Strand::forward : Strand::reverse;
    }
};

/// Sort key for BEDPE output: (mate1, mate2) by position, then strand.
bool record_less(const SDRecord& a, const SDRecord& b);

Genome parse_fasta(const std::string& path);
Genome parse_fasta(std::istream& in);

/// Writes records sorted by (mate1, mate2). Columns:
/// chrom1 start1 end1 chrom2 start2 end2 name score strand1 strand2
/// alignment_length edit_distance error_total error_mutation error_gap
/// kimura jukes_cantor cigar
void write_bedpe(std::vector<SDRecord> records, const std::string& path);
void write_bedpe(std::vector<SDRecord> records, std::ostream& out);

std::vector<SDRecord> read_bedpe(const std::string& path);
std::vector<SDRecord> read_bedpe(std::istream& in);

/// round(1000 * (1 - error_total)) clamped to [0, 1000].
int bedpe_score(double error_total);

void write_fasta(const Genome& genome, std::ostream& out, std::size_t line_width = 60);

/// Shortest round-trip decimal representation; "inf" for +infinity.
std::string format_double(double v);

} // namespace sdscan
