#include "sdscan/sketch.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <numeric>

namespace sdscan {

std::vector<Minimizer> winnow(std::string_view bases, const SketchParams& params) {
    params.validate();
    return winnow_with(bases, params.k, params.w, DefaultKmerHash{params.hash_seed});
}

MinimizerIndex build_index(const Genome& genome, const SketchParams& params, bool seed_mode) {
    params.validate();
    MinimizerIndex idx;
    idx.params_ = params;
    idx.seed_mode_ = seed_mode;
    const auto k = static_cast<std::uint64_t>(params.k);

    for (std::size_t s = 0; s < genome.size(); ++s) {
        const auto& seq = genome[s];
        const auto off = genome.offset(s);
        auto mins = winnow(seq.bases, params);
        // Running count of masked bases so each k-mer's mask test is O(1).
        std::vector<std::uint32_t> masked_prefix;
        if (seed_mode) {
            masked_prefix.resize(seq.length() + 1, 0);
            for (std::size_t i = 0; i < seq.length(); ++i)
                masked_prefix[i + 1] = masked_prefix[i] + (seq.mask[i] ? 1 : 0);
        }
        for (const auto& m : mins) {
            if (seed_mode && masked_prefix[m.position + k] - masked_prefix[m.position] == k) continue;
            idx.positions_.push_back(off + m.position);
            idx.hashes_.push_back(m.hash);
        }
    }
    idx.finalize();
    return idx;
}

void MinimizerIndex::finalize() {
    std::vector<std::size_t> order(positions_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return hashes_[a] != hashes_[b] ? hashes_[a] < hashes_[b] : positions_[a] < positions_[b];
    });
    rev_hashes_.resize(order.size());
    rev_positions_.resize(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        rev_hashes_[i] = hashes_[order[i]];
        rev_positions_[i] = positions_[order[i]];
    }
}

std::span<const std::uint64_t> MinimizerIndex::lookup(std::uint64_t hash) const {
    auto [lo, hi] = std::equal_range(rev_hashes_.begin(), rev_hashes_.end(), hash);
    auto b = static_cast<std::size_t>(lo - rev_hashes_.begin());
    auto e = static_cast<std::size_t>(hi - rev_hashes_.begin());
    return std::span<const std::uint64_t>(rev_positions_).subspan(b, e - b);
}

std::pair<std::size_t, std::size_t> MinimizerIndex::range(std::uint64_t begin, std::uint64_t end) const {
    auto lo = std::lower_bound(positions_.begin(), positions_.end(), begin);
    auto hi = std::lower_bound(lo, positions_.end(), end);
    return {static_cast<std::size_t>(lo - positions_.begin()), static_cast<std::size_t>(hi - positions_.begin())};
}

namespace {

constexpr std::array<char, 8> kIndexMagic = {'S', 'D', 'S', 'C', 'I', 'D', 'X', '\0'};
constexpr std::uint32_t kIndexVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b.data(), 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> b;
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b.data(), 4);
}

std::uint64_t get_u64(std::istream& in) {
    std::array<unsigned char, 8> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 8)) throw IoError("truncated index file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

std::uint32_t get_u32(std::istream& in) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw IoError("truncated index file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

} // namespace

void MinimizerIndex::save(const std::string& path, std::uint64_t genome_length) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(kIndexMagic.data(), kIndexMagic.size());
    put_u32(out, kIndexVersion);
    put_u32(out, static_cast<std::uint32_t>(params_.k));
    put_u32(out, static_cast<std::uint32_t>(params_.w));
    put_u64(out, params_.hash_seed);
    put_u32(out, seed_mode_ ? 1 : 0);
    put_u64(out, genome_length);
    put_u64(out, positions_.size());
    for (auto p : positions_) put_u64(out, p);
    for (auto h : hashes_) put_u64(out, h);
    if (!out) throw IoError("write failed: " + path);
}

MinimizerIndex MinimizerIndex::load(const std::string& path, const SketchParams& expected, bool seed_mode,
                                    std::uint64_t genome_length) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kIndexMagic) throw IoError("bad index magic in " + path);
    if (get_u32(in) != kIndexVersion) throw IoError("unsupported index version in " + path);
    SketchParams p;
    p.k = static_cast<int>(get_u32(in));
    p.w = static_cast<int>(get_u32(in));
    p.hash_seed = get_u64(in);
    if (!(p == expected)) throw IoError("index parameters do not match request: " + path);
    if ((get_u32(in) != 0) != seed_mode) throw IoError("index seed mode does not match request: " + path);
    if (get_u64(in) != genome_length) throw IoError("index was built for a different genome: " + path);
    auto n = get_u64(in);
    MinimizerIndex idx;
    idx.params_ = p;
    idx.seed_mode_ = seed_mode;
    idx.positions_.resize(n);
    idx.hashes_.resize(n);
    for (auto& v : idx.positions_) v = get_u64(in);
    for (auto& v : idx.hashes_) v = get_u64(in);
    for (std::size_t i = 1; i < n; ++i)
        if (idx.positions_[i] <= idx.positions_[i - 1]) throw IoError("index positions not increasing: " + path);
    idx.finalize();
    return idx;
}

// ---------------------------------------------------------------------------
// RollingEstimator

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

RollingEstimator::RollingEstimator() { nodes_.reserve(256); }

void RollingEstimator::clear() {
    nodes_.clear();
    free_.clear();
    root_ = -1;
    own_distinct_ = 0;
}

void RollingEstimator::pull(std::int32_t t) {
    auto& n = nodes_[t];
    n.size = 1 + count(n.left) + count(n.right);
    n.shared = ((n.own > 0 && n.other > 0) ? 1 : 0) + shared(n.left) + shared(n.right);
}

void RollingEstimator::split_less(std::int32_t t, std::uint64_t key, std::int32_t& l, std::int32_t& r) {
    if (t < 0) {
        l = r = -1;
        return;
    }
    if (nodes_[t].key < key) {
        split_less(nodes_[t].right, key, nodes_[t].right, r);
        l = t;
    } else {
        split_less(nodes_[t].left, key, l, nodes_[t].left);
        r = t;
    }
    pull(t);
}

void RollingEstimator::split_less_equal(std::int32_t t, std::uint64_t key, std::int32_t& l, std::int32_t& r) {
    if (t < 0) {
        l = r = -1;
        return;
    }
    if (nodes_[t].key <= key) {
        split_less_equal(nodes_[t].right, key, nodes_[t].right, r);
        l = t;
    } else {
        split_less_equal(nodes_[t].left, key, l, nodes_[t].left);
        r = t;
    }
    pull(t);
}

std::int32_t RollingEstimator::merge(std::int32_t l, std::int32_t r) {
    if (l < 0) return r;
    if (r < 0) return l;
    if (nodes_[l].prio > nodes_[r].prio) {
        nodes_[l].right = merge(nodes_[l].right, r);
        pull(l);
        return l;
    }
    nodes_[r].left = merge(l, nodes_[r].left);
    pull(r);
    return r;
}

std::int32_t RollingEstimator::alloc(std::uint64_t key) {
    Node n{key, splitmix(key), 0, 0, -1, -1, 1, 0};
    if (!free_.empty()) {
        auto id = free_.back();
        free_.pop_back();
        nodes_[id] = n;
        return id;
    }
    nodes_.push_back(n);
    return static_cast<std::int32_t>(nodes_.size() - 1);
}

void RollingEstimator::add(std::uint64_t hash, Side side) {
    std::int32_t a, b, m, c;
    split_less(root_, hash, a, b);
    split_less_equal(b, hash, m, c);
    if (m < 0) m = alloc(hash);
    auto& n = nodes_[m];
    if (side == Side::own) {
        if (n.own++ == 0) ++own_distinct_;
    } else {
        ++n.other;
    }
    pull(m);
    root_ = merge(merge(a, m), c);
}

void RollingEstimator::remove(std::uint64_t hash, Side side) {
    std::int32_t a, b, m, c;
    split_less(root_, hash, a, b);
    split_less_equal(b, hash, m, c);
    auto restore = [&] { root_ = merge(merge(a, m), c); };
    if (m < 0) {
        restore();
        throw std::logic_error("RollingEstimator::remove: hash not present");
    }
    auto& n = nodes_[m];
    auto& cnt = side == Side::own ? n.own : n.other;
    if (cnt == 0) {
        restore();
        throw std::logic_error("RollingEstimator::remove: hash not present on this side");
    }
    --cnt;
    if (side == Side::own && cnt == 0) --own_distinct_;
    if (n.own == 0 && n.other == 0) {
        free_.push_back(m);
        m = -1;
    } else {
        pull(m);
    }
    restore();
}

std::size_t RollingEstimator::shared_in_sketch() const {
    std::size_t remaining = own_distinct_;
    std::size_t acc = 0;
    std::int32_t t = root_;
    while (t >= 0 && remaining > 0) {
        const auto& n = nodes_[t];
        auto ls = count(n.left);
        if (remaining <= ls) {
            t = n.left;
            continue;
        }
        acc += shared(n.left) + ((n.own > 0 && n.other > 0) ? 1 : 0);
        remaining -= ls + 1;
        t = n.right;
    }
    return acc;
}

double RollingEstimator::estimate() const {
    if (own_distinct_ == 0) return 0.0;
    return static_cast<double>(shared_in_sketch()) / static_cast<double>(own_distinct_);
}

// ---------------------------------------------------------------------------

double jaccard_exact(const std::unordered_set<std::uint64_t>& a, const std::unordered_set<std::uint64_t>& b) {
    if (a.empty() && b.empty()) return 0.0;
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    std::size_t inter = 0;
    for (auto x : small) inter += large.count(x);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

std::unordered_set<std::uint64_t> kmer_set(std::string_view bases, int k) {
    std::unordered_set<std::uint64_t> out;
    if (k < 1 || k > 31) throw std::invalid_argument("k must be in [1, 31]");
    const std::uint64_t mask = (1ULL << (2 * k)) - 1;
    std::uint64_t packed = 0;
    int run = 0;
    for (char ch : bases) {
        auto c = base_code(ch);
        if (c == kBaseN) {
            run = 0;
            packed = 0;
            continue;
        }
        packed = ((packed << 2) | c) & mask;
        if (++run >= k) out.insert(packed);
    }
    return out;
}

} // namespace sdscan
