#include "helpers.hpp"

#include "sdscan/align.hpp"
#include "sdscan/dna.hpp"
#include "sdscan/pipeline.hpp"
#include "sdscan/simulate.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

#include <unistd.h>

using namespace sdscan;

namespace {

Genome planted(std::uint64_t seed, std::uint64_t length, std::uint64_t from, std::uint64_t to, std::uint64_t size,
               bool inverted) {
    std::mt19937_64 rng(seed);
    auto bases = testutil::random_dna(rng, length);
    auto copy = bases.substr(from, size);
    if (inverted) copy = reverse_complement(copy);
    bases.replace(to, size, copy);
    return testutil::genome_of({{"chr1", bases}});
}

RunConfig config_for(double delta, double delta_m) {
    RunConfig rc;
    rc.model = ErrorModel::from_budgets(delta_m, delta - delta_m);
    return rc;
}

std::string bedpe(const std::vector<SDRecord>& records) {
    std::ostringstream out;
    write_bedpe(records, out);
    return out.str();
}

SDRecord record(Interval a, Interval b, std::uint64_t length, double error) {
    SDRecord r;
    r.mate1 = std::move(a);
    r.mate2 = std::move(b);
    r.alignment_length = length;
    r.error_total = error;
    return r;
}

bool mirrored(const SDRecord& a, const SDRecord& b) {
    return a.mate1 == b.mate2 && a.mate2 == b.mate1;
}

} // namespace

TEST_CASE("exact duplication gives one clean record") {
    auto g = planted(1, 60'000, 10'000, 40'000, 5000, false);
    auto records = run(g, config_for(0.25, 0.15));
    REQUIRE(records.size() == 1);
    const auto& r = records[0];
    CHECK(r.error_total == 0.0);
    CHECK(r.mate1.strand == Strand::forward);
    CHECK(r.mate2.strand == Strand::forward);
    CHECK(coverage({"chr1", 10'000, 15'000, Strand::forward}, r.mate1) >= 0.95);
    CHECK(coverage({"chr1", 40'000, 45'000, Strand::forward}, r.mate2) >= 0.95);
    CHECK(r.kimura == 0.0);
    CHECK(r.jukes_cantor == 0.0);
    CHECK(validate_record(g, r, 0.25).ok);
}

TEST_CASE("inverted duplication is reported on opposite strands") {
    auto g = planted(2, 60'000, 5'000, 30'000, 4000, true);
    auto records = run(g, config_for(0.25, 0.15));
    REQUIRE(records.size() == 1);
    const auto& r = records[0];
    CHECK(r.relative_strand() == Strand::reverse);
    CHECK(r.mate1.strand == Strand::forward);
    CHECK(r.mate2.strand == Strand::reverse);
    CHECK(r.error_total == 0.0);
    CHECK(coverage({"chr1", 5'000, 9'000, Strand::forward}, r.mate1) >= 0.95);
    CHECK(coverage({"chr1", 30'000, 34'000, Strand::forward}, r.mate2) >= 0.95);
    CHECK(validate_record(g, r, 0.25).ok);

    auto forward_only = config_for(0.25, 0.15);
    forward_only.reverse_strand = false;
    CHECK(run(g, forward_only).empty());
}

TEST_CASE("random genome has no duplications") {
    std::mt19937_64 rng(3);
    auto g = testutil::genome_of({{"chr1", testutil::random_dna(rng, 200'000)}});
    CHECK(run(g, config_for(0.25, 0.15)).empty());
}

TEST_CASE("duplication across two sequences") {
    std::mt19937_64 rng(4);
    auto a = testutil::random_dna(rng, 40'000);
    auto b = testutil::random_dna(rng, 40'000);
    b.replace(20'000, 3000, a.substr(1000, 3000));
    auto g = testutil::genome_of({{"chrA", a}, {"chrB", b}});
    auto records = run(g, config_for(0.25, 0.15));
    REQUIRE(records.size() == 1);
    CHECK(records[0].mate1.seq_name == "chrA");
    CHECK(records[0].mate2.seq_name == "chrB");
}

TEST_CASE("simulated duplications re-validate") {
    SimConfig sc;
    sc.rng_seed = 5;
    sc.inverted_fraction = 0.5;
    int found = 0;
    for (std::uint64_t i = 0; i < 30; ++i) {
        sc.delta = 0.02 + 0.18 * static_cast<double>(i % 10) / 9;
        auto p = simulate_pair(sc, i);
        auto records = run(p.genome, config_for(0.25, 0.15));
        found += score_detection(p.truth, records);
        for (const auto& r : records) {
            auto v = validate_record(p.genome, r, 0.25);
            CHECK_MESSAGE(v.ok, v.reason);
            CHECK(reference_length(parse_cigar(r.cigar)) == r.mate1.length());
            CHECK(query_length(parse_cigar(r.cigar)) == r.mate2.length());
            CHECK_FALSE(position_less(r.mate2, r.mate1));
            auto rc = score_cigar(parse_cigar(r.cigar), oriented_bases(p.genome, r.mate1),
                                  oriented_bases(p.genome, r.mate2), {});
            CHECK(std::abs(rc.error_total() - r.error_total) <= 1e-9);
            CHECK(r.error_mutation + r.error_gap == doctest::Approx(r.error_total));
        }
        for (std::size_t x = 0; x < records.size(); ++x)
            for (std::size_t y = 0; y < records.size(); ++y)
                if (x != y) CHECK_FALSE(mirrored(records[x], records[y]));
    }
    CHECK(found >= 29);
}

TEST_CASE("same output for any thread count") {
    GenomeSimConfig gc;
    gc.total_length = 400'000;
    gc.sds = 10;
    gc.max_sd = 8000;
    gc.rng_seed = 6;
    auto sim = simulate_genome(gc);
    auto rc = config_for(0.27, 0.15);
    rc.threads = 1;
    const auto one = bedpe(run(sim.genome, rc));
    rc.threads = 4;
    const auto four = bedpe(run(sim.genome, rc));
    rc.threads = 7;
    const auto seven = bedpe(run(sim.genome, rc));
    CHECK(one == four);
    CHECK(one == seven);
    CHECK(!one.empty());
}

TEST_CASE("checkpointed regions are reused") {
    auto g = planted(7, 50'000, 2'000, 30'000, 3000, false);
    auto dir = std::filesystem::temp_directory_path() / ("sdscan_ckpt_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    auto rc = config_for(0.25, 0.15);
    rc.checkpoint_dir = dir.string();
    RunStats first, second;
    auto a = run(g, rc, &first);
    CHECK_FALSE(first.regions_from_checkpoint);
    CHECK(std::filesystem::exists(dir / "regions.tsv"));
    auto b = run(g, rc, &second);
    CHECK(second.regions_from_checkpoint);
    CHECK(second.regions == first.regions);
    CHECK(bedpe(a) == bedpe(b));
    std::filesystem::remove_all(dir);
}

TEST_CASE("masked duplications are not reported") {
    auto g = planted(8, 60'000, 10'000, 40'000, 5000, false);
    Genome masked;
    auto s = g[0];
    for (std::uint64_t x = 10'000; x < 15'000; ++x) s.mask[x] = true;
    masked.add(s);
    CHECK(run(masked, config_for(0.25, 0.15)).empty());
}

TEST_CASE("filter_final keeps unique sequence") {
    Interval a{"chr1", 0, 1000, Strand::forward};
    Interval b{"chr1", 5000, 6000, Strand::forward};
    auto clean = record(a, b, 1000, 0.0);
    auto repeat = record(a, b, 1000, 0.0);
    repeat.masked_fraction2 = 1.0;
    auto mostly = record(a, b, 1000, 0.0);
    mostly.masked_fraction1 = 0.95;
    auto border = record(a, b, 1000, 0.0);
    border.masked_fraction1 = 0.9;
    auto out = filter_final({clean, repeat, mostly, border}, 100);
    REQUIRE(out.size() == 2);
    CHECK(out[0].masked_fraction1 == 0.0);
    CHECK(out[1].masked_fraction1 == 0.9);
}

TEST_CASE("remove_redundant drops contained and overlapping records") {
    auto big = record({"chr1", 0, 5000, Strand::forward}, {"chr1", 10'000, 15'000, Strand::forward}, 5000, 0.1);
    auto inside = record({"chr1", 1000, 3000, Strand::forward}, {"chr1", 11'000, 13'000, Strand::forward}, 2000, 0.0);
    auto near = record({"chr1", 200, 5100, Strand::forward}, {"chr1", 10'100, 15'050, Strand::forward}, 4900, 0.05);
    auto other = record({"chr1", 1000, 3000, Strand::forward}, {"chr1", 30'000, 32'000, Strand::forward}, 2000, 0.0);
    auto inverted = record({"chr1", 1000, 3000, Strand::forward}, {"chr1", 11'000, 13'000, Strand::reverse}, 2000, 0.0);
    auto out = remove_redundant({inside, big, near, other, big, inverted}, 0.8);
    REQUIRE(out.size() == 3);
    CHECK(out[0].mate1 == big.mate1);
    int others = 0, inv = 0;
    for (const auto& r : out) {
        others += r.mate2 == other.mate2;
        inv += r.mate2.strand == Strand::reverse;
    }
    CHECK(others == 1);
    CHECK(inv == 1);
}

TEST_CASE("finalize_records enforces the SD conditions") {
    auto rc = config_for(0.25, 0.15);
    auto good = record({"chr1", 0, 2000, Strand::forward}, {"chr1", 5000, 7000, Strand::forward}, 2000, 0.1);
    auto short_one = record({"chr1", 100, 999, Strand::forward}, {"chr1", 9000, 9899, Strand::forward}, 899, 0.0);
    auto noisy = record({"chr1", 20'000, 22'000, Strand::forward}, {"chr1", 30'000, 32'000, Strand::forward}, 2000,
                        0.3);
    auto self = record({"chr1", 40'000, 42'000, Strand::forward}, {"chr1", 40'100, 42'100, Strand::forward}, 2100,
                       0.05);
    auto out = finalize_records({noisy, self, short_one, good}, rc);
    REQUIRE(out.size() == 1);
    CHECK(out[0].mate1 == good.mate1);
}

TEST_CASE("canonicalize orders mates and rewrites the CIGAR") {
    SDRecord r;
    r.mate1 = {"chr1", 500, 510, Strand::forward};
    r.mate2 = {"chr1", 100, 108, Strand::forward};
    r.cigar = "4M2D4M";
    auto c = canonicalize(r);
    CHECK(c.mate1.start == 100);
    CHECK(c.mate2.start == 500);
    CHECK(c.cigar == "4M2I4M");

    SDRecord inv;
    inv.mate1 = {"chr1", 100, 110, Strand::reverse};
    inv.mate2 = {"chr1", 500, 509, Strand::forward};
    inv.cigar = "2M1D7M";
    auto ci = canonicalize(inv);
    CHECK(ci.mate1.strand == Strand::forward);
    CHECK(ci.mate2.strand == Strand::reverse);
    CHECK(ci.cigar == "7M1D2M");
}

TEST_CASE("make_record aligns the oriented mates") {
    std::mt19937_64 rng(9);
    auto s = testutil::random_dna(rng, 10'000);
    auto seg = s.substr(1000, 1500);
    s.replace(6000, 1500, reverse_complement(seg));
    auto g = testutil::genome_of({{"chr1", s}});
    auto r = make_record(g, {"chr1", 6000, 7500, Strand::reverse}, {"chr1", 1000, 2500, Strand::forward}, {});
    CHECK(r.mate1.start == 1000);
    CHECK(r.mate2.strand == Strand::reverse);
    CHECK(r.cigar == "1500M");
    CHECK(r.error_total == 0.0);
    CHECK(validate_record(g, r, 0.1).ok);

    auto bad = r;
    bad.cigar = "1499M";
    CHECK_FALSE(validate_record(g, bad, 0.1).ok);
    auto swapped = r;
    std::swap(swapped.mate1, swapped.mate2);
    CHECK_FALSE(validate_record(g, swapped, 0.1).ok);
    auto lying = r;
    lying.error_total = 0.01;
    CHECK_FALSE(validate_record(g, lying, 0.1).ok);
}

TEST_CASE("run refuses invalid configurations") {
    auto g = planted(10, 20'000, 1000, 10'000, 2000, false);
    auto rc = config_for(0.25, 0.15);
    rc.q = 0;
    CHECK_THROWS(run(g, rc));
    rc = config_for(0.25, 0.15);
    rc.anchor_k = 0;
    CHECK_THROWS(run(g, rc));
}
