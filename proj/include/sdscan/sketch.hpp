#pragma once

#include "sdscan/dna.hpp"
#include "sdscan/genome_io.hpp"

#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace sdscan {

struct SketchParams {
    int k = 12;
    int w = 16;
    std::uint64_t hash_seed = 0x5d1f4e3a9c2b7061ULL;

    void validate() const {
        if (k < 1 || k > 31) throw std::invalid_argument("k must be in [1, 31]");
        if (w < 1) throw std::invalid_argument("w must be >= 1");
    }
    friend bool operator==(const SketchParams&, const SketchParams&) = default;
};

struct Minimizer {
    std::uint64_t position = 0;
    std::uint64_t hash = 0;
    bool masked = false;

    friend bool operator==(const Minimizer&, const Minimizer&) = default;
};

/// Invertible mix of a 2k-bit packed k-mer; distinct k-mers of the same k never collide.
inline std::uint64_t kmer_hash(std::uint64_t packed, int k, std::uint64_t seed) {
    const std::uint64_t mask = (k >= 32) ? ~0ULL : ((1ULL << (2 * k)) - 1);
    std::uint64_t key = (packed ^ seed) & mask;
    key = (~key + (key << 21)) & mask;
    key = key ^ key >> 24;
    key = ((key + (key << 3)) + (key << 8)) & mask;
    key = key ^ key >> 14;
    key = ((key + (key << 2)) + (key << 4)) & mask;
    key = key ^ key >> 28;
    key = (key + (key << 31)) & mask;
    return key;
}

struct DefaultKmerHash {
    std::uint64_t seed;
    std::uint64_t operator()(std::uint64_t packed, int k) const { return kmer_hash(packed, k, seed); }
};

/// Winnowing with an arbitrary hash of the 2-bit packed k-mer. In every window
/// of w consecutive k-mer start positions the minimal hash is selected
/// (rightmost on ties). k-mers containing N are never candidates. A sequence
/// with fewer than w k-mers is treated as a single window.
template <typename Hash>
std::vector<Minimizer> winnow_with(std::string_view bases, int k, int w, Hash&& hash) {
    std::vector<Minimizer> out;
    if (bases.size() < static_cast<std::size_t>(k) || k < 1 || w < 1) return out;
    const std::size_t nkmers = bases.size() - k + 1;
    const std::size_t win = std::min<std::size_t>(w, nkmers);
    const std::uint64_t mask = (1ULL << (2 * k)) - 1;

    struct Entry {
        std::uint64_t pos, hash;
    };
    std::deque<Entry> dq;
    std::uint64_t packed = 0;
    std::size_t valid_run = 0;
    bool emitted = false;
    std::uint64_t last = 0;

    for (std::size_t i = 0; i < bases.size(); ++i) {
        auto c = base_code(bases[i]);
        if (c == kBaseN) {
            valid_run = 0;
            packed = 0;
        } else {
            packed = ((packed << 2) | c) & mask;
            ++valid_run;
        }
        if (i + 1 < static_cast<std::size_t>(k)) continue;
        const std::uint64_t p = i + 1 - k; // k-mer start
        if (valid_run >= static_cast<std::size_t>(k)) {
            std::uint64_t h = hash(packed, k);
            while (!dq.empty() && dq.back().hash >= h) dq.pop_back();
            dq.push_back({p, h});
        }
        if (p + 1 < win) continue;
        const std::uint64_t wstart = p + 1 - win;
        while (!dq.empty() && dq.front().pos < wstart) dq.pop_front();
        if (!dq.empty() && (!emitted || dq.front().pos != last)) {
            out.push_back({dq.front().pos, dq.front().hash, false});
            last = dq.front().pos;
            emitted = true;
        }
    }
    return out;
}

std::vector<Minimizer> winnow(std::string_view bases, const SketchParams& params);

/// Winnowing fingerprint of a whole genome with global positions (I_G) and
/// its inverse relation hash -> positions.
class MinimizerIndex {
  public:
    MinimizerIndex() = default;

    const SketchParams& params() const { return params_; }
    std::size_t size() const { return positions_.size(); }
    bool empty() const { return positions_.empty(); }

    std::span<const std::uint64_t> positions() const { return positions_; }
    std::span<const std::uint64_t> hashes() const { return hashes_; }

    /// Sorted positions carrying `hash`.
    std::span<const std::uint64_t> lookup(std::uint64_t hash) const;

    /// Index range [first, last) of forward entries with begin <= position < end.
    std::pair<std::size_t, std::size_t> range(std::uint64_t begin, std::uint64_t end) const;

    /// Entries whose k-mer lies entirely inside [begin, end).
    std::pair<std::size_t, std::size_t> window(std::uint64_t begin, std::uint64_t end) const {
        auto k = static_cast<std::uint64_t>(params_.k);
        if (end < begin + k) return {0, 0};
        return range(begin, end - k + 1);
    }

    bool seed_mode() const { return seed_mode_; }

    /// Little-endian binary dump: header {magic, version, k, w, hash_seed},
    /// then {seed_mode, genome_length, count} and the packed arrays.
    void save(const std::string& path, std::uint64_t genome_length) const;
    /// Throws IoError on a malformed file or when the stored header disagrees
    /// with the requested parameters.
    static MinimizerIndex load(const std::string& path, const SketchParams& expected, bool seed_mode,
                               std::uint64_t genome_length);

    friend MinimizerIndex build_index(const Genome& genome, const SketchParams& params, bool seed_mode);

  private:
    void finalize();

    SketchParams params_;
    bool seed_mode_ = false;
    std::vector<std::uint64_t> positions_;
    std::vector<std::uint64_t> hashes_;
    // Reverse relation, sorted by (hash, position).
    std::vector<std::uint64_t> rev_hashes_;
    std::vector<std::uint64_t> rev_positions_;
};

/// Builds I_G. With seed_mode, minimizers whose k-mer is fully soft-masked are dropped.
MinimizerIndex build_index(const Genome& genome, const SketchParams& params, bool seed_mode);

enum class Side { own, other };

/// Ordered multiset of minimizer hashes from two windows (the set L), kept in
/// a treap augmented with subtree sizes and intersection counts so that the
/// winnowed MinHash estimate is available after each O(log |L|) update.
class RollingEstimator {
  public:
    RollingEstimator();

    void add(std::uint64_t hash, Side side);
    /// Throws std::logic_error when the hash is not present on that side.
    void remove(std::uint64_t hash, Side side);
    void clear();

    /// s: number of distinct hashes in the own window.
    std::size_t sketch_size() const { return own_distinct_; }
    /// Distinct hashes in the union.
    std::size_t members() const { return count(root_); }
    /// Members among the s smallest that are present in both windows.
    std::size_t shared_in_sketch() const;
    double estimate() const;

  private:
    struct Node {
        std::uint64_t key;
        std::uint64_t prio;
        std::uint32_t own, other;
        std::int32_t left, right;
        std::uint32_t size, shared;
    };

    std::uint32_t count(std::int32_t t) const { return t < 0 ? 0 : nodes_[t].size; }
    std::uint32_t shared(std::int32_t t) const { return t < 0 ? 0 : nodes_[t].shared; }
    void pull(std::int32_t t);
    void split_less(std::int32_t t, std::uint64_t key, std::int32_t& l, std::int32_t& r);
    void split_less_equal(std::int32_t t, std::uint64_t key, std::int32_t& l, std::int32_t& r);
    std::int32_t merge(std::int32_t l, std::int32_t r);
    std::int32_t alloc(std::uint64_t key);

    std::vector<Node> nodes_;
    std::vector<std::int32_t> free_;
    std::int32_t root_ = -1;
    std::size_t own_distinct_ = 0;
};

/// |a ∩ b| / |a ∪ b|; 0 when both are empty.
double jaccard_exact(const std::unordered_set<std::uint64_t>& a, const std::unordered_set<std::uint64_t>& b);

/// Set of packed k-mers of a sequence (k-mers with N skipped).
std::unordered_set<std::uint64_t> kmer_set(std::string_view bases, int k);

} // namespace sdscan
