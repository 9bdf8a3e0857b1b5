#include "helpers.hpp"

#include "sdscan/align.hpp"
#include "sdscan/dna.hpp"
#include "sdscan/oracles.hpp"
#include "sdscan/simulate.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace sdscan;

namespace {

std::string slice(const Genome& g, const Interval& iv) {
    return g[*g.find(iv.seq_name)].bases.substr(iv.start, iv.length());
}

std::string copy_bases(const Genome& g, const TruthRecord& t) {
    auto s = slice(g, t.copy);
    return t.copy.strand == Strand::reverse ? reverse_complement(s) : s;
}

SDRecord call(Interval a, Interval b) {
    SDRecord r;
    r.mate1 = std::move(a);
    r.mate2 = std::move(b);
    return r;
}

SimConfig small_config() {
    SimConfig sc;
    sc.min_backbone = 6000;
    sc.max_backbone = 12000;
    sc.max_sd = 2500;
    return sc;
}

} // namespace

TEST_CASE("same config gives the same instance") {
    auto sc = small_config();
    sc.delta = 0.2;
    sc.inverted_fraction = 0.5;
    for (std::uint64_t i = 0; i < 20; ++i) {
        auto a = simulate_pair(sc, i);
        auto b = simulate_pair(sc, i);
        CHECK(a.genome[0].bases == b.genome[0].bases);
        CHECK(a.truth.original == b.truth.original);
        CHECK(a.truth.copy == b.truth.copy);
        CHECK(a.truth.mutation_script == b.truth.mutation_script);
        CHECK(a.truth.scripted_delta_m == b.truth.scripted_delta_m);
    }
    CHECK(simulate_pair(sc, 0).genome[0].bases != simulate_pair(sc, 1).genome[0].bases);
    auto other = sc;
    other.rng_seed = 2;
    CHECK(simulate_pair(sc, 0).genome[0].bases != simulate_pair(other, 0).genome[0].bases);
}

TEST_CASE("replaying the script reproduces the copy") {
    auto sc = small_config();
    sc.inverted_fraction = 0.5;
    int inverted = 0;
    for (std::uint64_t i = 0; i < 300; ++i) {
        sc.delta = 0.3 * static_cast<double>(i % 7) / 6;
        auto p = simulate_pair(sc, i);
        const auto& t = p.truth;
        REQUIRE(replay(slice(p.genome, t.original), t.mutation_script) == copy_bases(p.genome, t));
        CHECK(t.original.length() >= sc.min_sd);
        CHECK(t.original.length() <= sc.max_sd);
        CHECK(t.original.strand == Strand::forward);
        CHECK((t.copy.end <= t.original.start || t.original.end <= t.copy.start));
        inverted += t.copy.strand == Strand::reverse;
    }
    CHECK(inverted > 100);
    CHECK(inverted < 200);
}

TEST_CASE("zero divergence gives an exact copy") {
    auto sc = small_config();
    sc.delta = 0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        auto p = simulate_pair(sc, i);
        CHECK(p.truth.mutation_script.empty());
        CHECK(slice(p.genome, p.truth.original) == slice(p.genome, p.truth.copy));
        CHECK(p.truth.scripted_delta_m == 0.0);
        CHECK(p.truth.scripted_delta_g == 0.0);
    }
}

TEST_CASE("mutation-only budget is realized on average") {
    auto sc = small_config();
    sc.delta = 0.1;
    sc.delta_m = 0.1;
    sc.delta_g = 0.0;
    double sum = 0;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        auto p = simulate_pair(sc, i);
        CHECK(p.truth.scripted_delta_g == 0.0);
        for (const auto& e : p.truth.mutation_script) CHECK_FALSE(e.large);
        sum += p.truth.scripted_delta_m;
    }
    CHECK(std::abs(sum / 1000 - 0.1) <= 0.02);
}

TEST_CASE("realized divergence stays within the budget") {
    auto sc = small_config();
    sc.max_sd = 1700;
    int checked = 0;
    for (std::uint64_t i = 0; i < 150; ++i) {
        sc.delta = 0.02 + 0.28 * static_cast<double>(i % 15) / 14;
        auto p = simulate_pair(sc, i);
        const auto s1 = slice(p.genome, p.truth.original);
        const auto s2 = copy_bases(p.genome, p.truth);
        if (s1.size() > 2000 || s2.size() > 2000) continue;
        auto b = oracle::align_brute(s1, s2, 5, 4, 40, 1);
        auto aln = score_cigar(parse_cigar(b.cigar), s1, s2, {});
        CHECK(aln.error_total() <= sc.delta + 0.02);
        ++checked;
    }
    CHECK(checked >= 100);
}

TEST_CASE("scripts respect their budgets") {
    std::mt19937_64 rng(5);
    for (int it = 0; it < 300; ++it) {
        const auto len = 1000 + static_cast<std::uint64_t>(it) * 30;
        auto original = testutil::random_dna(rng, len);
        MutationBudget budget{0.15 * (it % 4) / 3.0, 0.15 * (it % 5) / 4.0, 0.005};
        auto script = draw_script(rng, original, budget);
        std::uint64_t small = 0, large = 0, events = 0;
        for (std::size_t x = 0; x < script.size(); ++x) {
            const auto& e = script[x];
            if (x) CHECK(script[x - 1].pos <= e.pos);
            const std::uint64_t n = e.kind == Edit::Kind::erase ? e.length : e.bases.size();
            if (e.large) {
                ++events;
                large += n;
                CHECK(n >= 50);
                CHECK(n <= 10000);
                const auto flank = std::max<std::uint64_t>(50, n);
                if (e.kind == Edit::Kind::erase) {
                    CHECK(e.pos >= flank);
                    CHECK(e.pos + n + flank <= len);
                }
            } else {
                small += n;
                if (e.kind != Edit::Kind::substitute) CHECK(n <= 5);
            }
        }
        CHECK(small <= static_cast<std::uint64_t>(std::llround(budget.delta_m * static_cast<double>(len))));
        CHECK(large <= static_cast<std::uint64_t>(budget.delta_g * static_cast<double>(len) + 1e-9));
        CHECK(events <= std::max<std::uint64_t>(1, static_cast<std::uint64_t>(budget.p_gap * static_cast<double>(len))));
        CHECK_NOTHROW(replay(original, script));
    }
}

TEST_CASE("script fractions") {
    std::vector<Edit> script{{Edit::Kind::substitute, 10, "A", 0, false},
                             {Edit::Kind::insert, 40, std::string(50, 'C'), 0, true}};
    auto [m, g] = script_fractions(100, script);
    CHECK(m == doctest::Approx(1.0 / 150));
    CHECK(g == doctest::Approx(50.0 / 150));
    auto [m2, g2] = script_fractions(100, {{Edit::Kind::erase, 10, {}, 3, false}});
    CHECK(m2 == doctest::Approx(0.03));
    CHECK(g2 == 0.0);
}

TEST_CASE("replay applies edits in order") {
    CHECK(replay("ACGTACGT", {}) == "ACGTACGT");
    CHECK(replay("ACGTACGT", {{Edit::Kind::substitute, 0, "T", 0, false}}) == "TCGTACGT");
    CHECK(replay("ACGTACGT", {{Edit::Kind::insert, 4, "GG", 0, false}}) == "ACGTGGACGT");
    CHECK(replay("ACGTACGT", {{Edit::Kind::erase, 2, {}, 3, false}}) == "ACCGT");
    CHECK(replay("ACGT", {{Edit::Kind::insert, 4, "A", 0, false}}) == "ACGTA");
    CHECK_THROWS_AS(replay("ACGT", {{Edit::Kind::substitute, 2, "A", 0, false}, {Edit::Kind::substitute, 1, "A", 0, false}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(replay("ACGT", {{Edit::Kind::erase, 2, {}, 5, false}}), std::invalid_argument);
}

TEST_CASE("detection needs more than 95% of both mates") {
    TruthRecord t;
    t.original = {"chr1", 1000, 2000, Strand::forward};
    t.copy = {"chr1", 5000, 6000, Strand::forward};
    CHECK(score_detection(t, {call(t.original, t.copy)}));
    CHECK(score_detection(t, {call(t.copy, t.original)}));
    CHECK_FALSE(score_detection(t, {call({"chr1", 1100, 2000, Strand::forward}, t.copy)}));
    CHECK(score_detection(t, {call({"chr1", 1040, 2000, Strand::forward}, {"chr1", 5000, 5970, Strand::forward})}));
    CHECK_FALSE(score_detection(t, {call({"chr1", 1050, 2000, Strand::forward}, t.copy)}));
    CHECK_FALSE(score_detection(t, {call(t.original, {"chr2", 5000, 6000, Strand::forward})}));
    CHECK_FALSE(score_detection(t, {}));
    CHECK(coverage(t.original, {"chr1", 0, 1500, Strand::forward}) == doctest::Approx(0.5));
    CHECK(coverage(t.original, {"chr2", 1000, 2000, Strand::forward}) == 0.0);
}

TEST_CASE("truth records round trip") {
    auto sc = small_config();
    sc.inverted_fraction = 0.5;
    std::vector<TruthRecord> truths;
    for (std::uint64_t i = 0; i < 10; ++i) truths.push_back(simulate_pair(sc, i).truth);
    std::stringstream ss;
    write_truth(truths, ss);
    auto back = read_truth(ss);
    REQUIRE(back.size() == truths.size());
    for (std::size_t x = 0; x < truths.size(); ++x) {
        CHECK(back[x].original == truths[x].original);
        CHECK(back[x].copy == truths[x].copy);
        CHECK(back[x].target_delta == doctest::Approx(truths[x].target_delta).epsilon(1e-6));
        CHECK(back[x].scripted_delta_m == doctest::Approx(truths[x].scripted_delta_m).epsilon(1e-6));
        CHECK(back[x].scripted_delta_g == doctest::Approx(truths[x].scripted_delta_g).epsilon(1e-6));
    }
    std::istringstream bad("chr1\t1\t2\tchr1\t3\n");
    CHECK_THROWS_AS(read_truth(bad), ParseError);
    std::istringstream strand("chr1\t1\t2\tchr1\t3\t4\tsd0\t0\t+\t*\t0.1\t0.05\t0.05\n");
    CHECK_THROWS_AS(read_truth(strand), ParseError);
}

TEST_CASE("invalid configurations are refused") {
    SimConfig sc;
    sc.delta = 1.0;
    CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
    sc.delta = 0.1;
    sc.delta_m = 0.2;
    CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
    sc.delta_m.reset();
    sc.min_sd = 5000;
    sc.max_sd = 4000;
    CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
    SimConfig tiny;
    tiny.min_backbone = tiny.max_backbone = 1500;
    CHECK_THROWS_AS(simulate_pair(tiny), std::invalid_argument);
    GenomeSimConfig crowded;
    crowded.total_length = 100'000;
    CHECK_THROWS_AS(simulate_genome(crowded), std::invalid_argument);
}

TEST_CASE("planted genome keeps duplications apart") {
    GenomeSimConfig gc;
    gc.total_length = 600'000;
    gc.sds = 15;
    gc.max_sd = 10'000;
    auto a = simulate_genome(gc);
    auto b = simulate_genome(gc);
    REQUIRE(a.truths.size() == 15);
    CHECK(a.genome.size() == 2);
    CHECK(a.genome[0].bases == b.genome[0].bases);
    std::vector<Interval> all;
    for (const auto& t : a.truths) {
        CHECK(replay(slice(a.genome, t.original), t.mutation_script) == copy_bases(a.genome, t));
        CHECK(t.target_delta >= gc.min_delta - 1e-12);
        CHECK(t.target_delta <= gc.max_delta + 1e-12);
        all.push_back(t.original);
        all.push_back(t.copy);
    }
    for (std::size_t x = 0; x < all.size(); ++x)
        for (std::size_t y = x + 1; y < all.size(); ++y) CHECK(overlap_length(all[x], all[y]) == 0);
}
