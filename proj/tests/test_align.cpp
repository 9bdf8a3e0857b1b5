#include "helpers.hpp"

#include "sdscan/align.hpp"
#include "sdscan/chain.hpp"
#include "sdscan/oracles.hpp"
#include "sdscan/simulate.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace sdscan;

namespace {

std::string mutate(std::mt19937_64& rng, const std::string& s, double rate) {
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> base(0, 3), len(1, 30);
    std::string out;
    for (std::size_t x = 0; x < s.size(); ++x) {
        const double r = u(rng);
        if (r < rate * 0.7) {
            out += "ACGT"[base(rng)];
        } else if (r < rate * 0.85) {
            x += len(rng) / 3;
        } else if (r < rate) {
            for (int n = len(rng) / 3; n >= 0; --n) out += "ACGT"[base(rng)];
            out += s[x];
        } else {
            out += s[x];
        }
    }
    if (out.empty()) out = "A";
    return out;
}

void check_consumption(const Alignment& aln, std::string_view s1, std::string_view s2) {
    CHECK(reference_length(aln.cigar) == s1.size());
    CHECK(query_length(aln.cigar) == s2.size());
    std::uint64_t total = 0;
    for (const auto& r : aln.cigar) total += r.count;
    CHECK(aln.aligned_length == total);
    CHECK(total >= std::max(s1.size(), s2.size()));
}

} // namespace

TEST_CASE("identical strings align as matches") {
    auto aln = global_align("ACGT", "ACGT");
    CHECK(cigar_string(aln.cigar) == "4M");
    CHECK(aln.mismatches == 0);
    CHECK(aln.error_total() == 0.0);
    CHECK(aln.score == 20);
}

TEST_CASE("single insertion") {
    auto aln = global_align("AAAA", "AATAA");
    CHECK(aln.gap_bases == 1);
    CHECK(aln.gap_opens == 1);
    CHECK(aln.matches == 4);
    CHECK(aln.score == 4 * 5 - 41);
    CHECK(reference_length(aln.cigar) == 4);
    CHECK(query_length(aln.cigar) == 5);
    CHECK(aln.cigar.size() == 3);
    CHECK(aln.cigar[1] == CigarRun{CigarOp::insertion, 1});
}

TEST_CASE("oracle on single columns") {
    auto b = oracle::align_brute("A", "G", 5, 4, 40, 1);
    CHECK(b.score == -4);
    CHECK(b.cigar == "1M");
    CHECK(global_align("A", "G").score == -4);
}

TEST_CASE("N is a mismatch against everything") {
    auto aln = global_align("ANGT", "ANGT");
    CHECK(aln.mismatches == 1);
    CHECK(aln.score == 3 * 5 - 4);
}

TEST_CASE("global_align matches the quadratic oracle") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> len(1, 2000);
    std::uniform_real_distribution<double> rate(0.0, 0.4);
    for (int it = 0; it < 1000; ++it) {
        std::string s1, s2;
        if (it % 5 == 0) {
            s1 = testutil::random_dna(rng, len(rng));
            s2 = testutil::random_dna(rng, len(rng));
        } else {
            s1 = testutil::random_dna(rng, len(rng));
            s2 = mutate(rng, s1, rate(rng)).substr(0, 2000);
        }
        auto aln = global_align(s1, s2);
        auto ref = oracle::align_brute(s1, s2, 5, 4, 40, 1);
        REQUIRE(aln.score == ref.score);
        check_consumption(aln, s1, s2);
        CHECK(score_cigar(aln.cigar, s1, s2, {}).score == aln.score);
    }
}

TEST_CASE("oracle agreement under other scoring") {
    std::mt19937_64 rng(12);
    AlignParams p;
    p.match = 2;
    p.mismatch = 3;
    p.gap_open = 5;
    p.gap_extend = 2;
    for (int it = 0; it < 200; ++it) {
        auto s1 = testutil::random_dna(rng, 1 + it * 3);
        auto s2 = mutate(rng, s1, 0.2);
        CHECK(global_align(s1, s2, p).score == oracle::align_brute(s1, s2, 2, 3, 5, 2).score);
    }
}

TEST_CASE("swapping the inputs swaps I and D") {
    std::mt19937_64 rng(13);
    for (int it = 0; it < 200; ++it) {
        auto s1 = testutil::random_dna(rng, 50 + it * 5);
        auto s2 = mutate(rng, s1, 0.15);
        auto ab = global_align(s1, s2);
        auto ba = global_align(s2, s1);
        CHECK(ab.score == ba.score);
        auto swapped = swap_roles(ab.cigar);
        CHECK(score_cigar(swapped, s2, s1, {}).score == ba.score);
        CHECK(reference_length(swapped) == s2.size());
    }
}

TEST_CASE("banded and unbanded agree") {
    std::mt19937_64 rng(14);
    for (int it = 0; it < 200; ++it) {
        auto s1 = testutil::random_dna(rng, 200 + it * 9);
        auto s2 = mutate(rng, s1, 0.1);
        AlignParams banded;
        banded.band = 16;
        auto full = global_align(s1, s2);
        auto b = global_align(s1, s2, banded);
        CHECK(b.score == full.score);
        check_consumption(b, s1, s2);
    }
}

TEST_CASE("record_alignment is deterministic and valid") {
    std::mt19937_64 rng(15);
    auto s1 = testutil::random_dna(rng, 6000);
    auto s2 = mutate(rng, s1, 0.1);
    auto a = record_alignment(s1, s2, {}, 1000);
    auto b = record_alignment(s1, s2, {}, 1000);
    CHECK(a.cigar == b.cigar);
    check_consumption(a, s1, s2);
    CHECK(auto_band(s1, s2) >= (s1.size() > s2.size() ? s1.size() - s2.size() : s2.size() - s1.size()));
}

TEST_CASE("too many cells without a band") {
    AlignParams p;
    p.max_cells = 1000;
    CHECK_THROWS_AS(global_align(std::string(100, 'A'), std::string(100, 'A'), p), ResourceError);
    p.band = 4;
    CHECK_NOTHROW(global_align(std::string(100, 'A'), std::string(100, 'A'), p));
}

TEST_CASE("invalid parameters") {
    AlignParams p;
    p.match = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.match = 1;
    p.gap_open = -1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("score_cigar recomputes counts") {
    auto aln = score_cigar(parse_cigar("2M1I2M"), "AAAA", "AATAA", {});
    CHECK(aln.matches == 4);
    CHECK(aln.gap_bases == 1);
    CHECK(aln.short_gap_bases == 1);
    CHECK(aln.aligned_length == 5);
    CHECK(aln.error_total() == doctest::Approx(0.2));
    CHECK(aln.error_mutation() == doctest::Approx(0.2));
    CHECK(aln.error_gap() == doctest::Approx(0.0));
    CHECK_THROWS_AS(score_cigar(parse_cigar("3M"), "AAAA", "AAAA", {}), std::invalid_argument);
    CHECK_THROWS_AS(score_cigar(parse_cigar("5M"), "AAAA", "AAAA", {}), std::invalid_argument);
}

TEST_CASE("long gaps count toward the gap share") {
    const std::string s1 = std::string(20, 'A') + std::string(20, 'C');
    const std::string s2 = std::string(20, 'A') + std::string(6, 'G') + std::string(20, 'C');
    auto aln = score_cigar(parse_cigar("20M6I20M"), s1, s2, {});
    CHECK(aln.short_gap_bases == 0);
    CHECK(aln.error_gap() == doctest::Approx(6.0 / 46));
    CHECK(aln.error_mutation() == doctest::Approx(0.0));
}

TEST_CASE("CIGAR text") {
    Cigar c{{CigarOp::match, 120}, {CigarOp::deletion, 3}, {CigarOp::match, 80}};
    CHECK(cigar_string(c) == "120M3D80M");
    CHECK(parse_cigar("120M3D80M") == c);
    CHECK_THROWS_AS(parse_cigar("12"), std::invalid_argument);
    CHECK_THROWS_AS(parse_cigar("3X"), std::invalid_argument);
    CHECK(normalize({{CigarOp::match, 2}, {CigarOp::match, 3}, {CigarOp::insertion, 0}, {CigarOp::match, 1}}) ==
          Cigar{{CigarOp::match, 6}});
    CHECK(swap_roles(parse_cigar("2M1I3D")) == parse_cigar("2M1D3I"));
}

TEST_CASE("align_chain with one anchor over both strings") {
    std::mt19937_64 rng(16);
    auto s = testutil::random_dna(rng, 500);
    Chain c;
    c.anchors = {{0, 0, 500}};
    c.begin1 = c.begin2 = 0;
    c.end1 = c.end2 = 500;
    auto ca = align_chain(c, s, s);
    CHECK(cigar_string(ca.alignment.cigar) == "500M");
    CHECK(ca.ref_begin == 0);
    CHECK(ca.ref_end == 500);
}

TEST_CASE("align_chain forces a one-sided gap") {
    std::mt19937_64 rng(17);
    auto left = testutil::random_dna(rng, 300);
    auto right = testutil::random_dna(rng, 300);
    auto extra = testutil::random_dna(rng, 10);
    const auto s1 = left + right;
    const auto s2 = left + extra + right;
    Chain c;
    c.anchors = {{0, 0, 300}, {300, 310, 300}};
    c.begin1 = c.begin2 = 0;
    c.end1 = 600;
    c.end2 = 610;
    auto ca = align_chain(c, s1, s2);
    CHECK(cigar_string(ca.alignment.cigar) == "300M10I300M");
    auto cb = align_chain(
        [&] {
            Chain d = c;
            d.anchors = {{0, 0, 300}, {310, 300, 300}};
            d.end1 = 610;
            d.end2 = 600;
            return d;
        }(),
        s2, s1);
    CHECK(cigar_string(cb.alignment.cigar) == "300M10D300M");
}

TEST_CASE("align_chain extends past the chain ends") {
    std::mt19937_64 rng(18);
    auto s = testutil::random_dna(rng, 1000);
    Chain c;
    c.anchors = {{200, 200, 100}, {400, 400, 100}};
    c.begin1 = c.begin2 = 200;
    c.end1 = c.end2 = 500;
    auto ca = align_chain(c, s, s);
    CHECK(ca.ref_begin == 0);
    CHECK(ca.ref_end == 1000);
    CHECK(ca.query_begin == 0);
    CHECK(ca.query_end == 1000);
    CHECK(cigar_string(ca.alignment.cigar) == "1000M");
}

TEST_CASE("align_chain on simulated duplications tracks the script") {
    SimConfig sc;
    sc.rng_seed = 19;
    sc.max_sd = 3000;
    sc.min_backbone = 8000;
    sc.max_backbone = 8000;
    std::uniform_real_distribution<double> dd(0.0, 0.2);
    std::mt19937_64 rng(20);
    double total_gap = 0;
    for (std::uint64_t it = 0; it < 1000; ++it) {
        sc.delta = dd(rng);
        auto pair = simulate_pair(sc, it);
        const auto& t = pair.truth;
        const auto s1 = pair.genome[*pair.genome.find(t.original.seq_name)].bases.substr(t.original.start,
                                                                                         t.original.length());
        const auto s2 = replay(s1, t.mutation_script);
        const auto anchors = find_anchors(s1, s2, AnchorOptions{});
        const auto dg = std::max(0.05, t.scripted_delta_g + 0.02);
        auto refined = refine_chains(initial_chains(anchors, dg, std::max(s1.size(), s2.size()), ChainScoring{}),
                                     ChainScoring{}, 1);
        REQUIRE(!refined.empty());
        auto ca = align_chain(refined.front(), s1, s2);
        check_consumption(ca.alignment, std::string_view(s1).substr(ca.ref_begin, ca.ref_end - ca.ref_begin),
                          std::string_view(s2).substr(ca.query_begin, ca.query_end - ca.query_begin));
        const double scripted = t.scripted_delta_m + t.scripted_delta_g;
        // a script is not always the cheapest explanation, so only excess error is bounded per pair
        CHECK(ca.alignment.error_total() <= scripted + 0.02);
        total_gap += std::abs(ca.alignment.error_total() - scripted);
    }
    CHECK(total_gap / 1000 <= 0.02);
}

TEST_CASE("Kimura distance") {
    CHECK(kimura_from_rates(0, 0) == 0.0);
    CHECK(kimura_from_rates(0.1, 0.05) == doctest::Approx(-0.5 * std::log(0.75 * std::sqrt(0.9))).epsilon(1e-12));
    CHECK(std::abs(kimura_from_rates(0.1, 0.05) - 0.17022) <= 1e-4);
    CHECK(std::isinf(kimura_from_rates(0.5, 0)));
    CHECK(std::isinf(kimura_from_rates(0, 0.5)));

    // A<->G is a transition, A<->C a transversion
    const std::string s1 = "AAAAAAAAAA";
    const std::string s2 = "GAAAAAAAAC";
    auto aln = score_cigar(parse_cigar("10M"), s1, s2, {});
    CHECK(kimura_distance(aln, s1, s2) == doctest::Approx(kimura_from_rates(0.1, 0.1)));
    auto same = score_cigar(parse_cigar("10M"), s1, s1, {});
    CHECK(kimura_distance(same, s1, s1) == 0.0);
}

TEST_CASE("Jukes-Cantor distance") {
    CHECK(jukes_cantor_from_p(0) == 0.0);
    CHECK(jukes_cantor_from_p(0.1) == doctest::Approx(-0.75 * std::log(1 - 0.4 / 3)).epsilon(1e-12));
    CHECK(std::abs(jukes_cantor_from_p(0.1) - 0.10733) <= 1e-4);
    CHECK(std::isinf(jukes_cantor_from_p(0.75)));
    auto aln = score_cigar(parse_cigar("2M3I8M"), "AAAAAAAAAA", "ACGTAAAAAAAAG", {});
    CHECK(jukes_cantor(aln) == doctest::Approx(jukes_cantor_from_p(2.0 / 10)));
}
