#include "sdscan/genome_io.hpp"
#include "sdscan/pipeline.hpp"
#include "sdscan/simulate.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

using namespace sdscan;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

int cmd_search(const std::string& fasta, const RunConfig& config, const std::string& out_path, bool show_stats) {
    auto genome = parse_fasta(fasta);
    RunStats stats;
    auto records = run(genome, config, &stats);
    if (out_path.empty() || out_path == "-")
        write_bedpe(records, std::cout);
    else
        write_bedpe(records, out_path);
    if (show_stats) {
        std::cerr << "seeds\t" << stats.seeds << "\nextended\t" << stats.extended << "\nregions\t" << stats.regions
                  << "\nregions_passing_qgram\t" << stats.regions_passing_qgram << "\nchains\t" << stats.chains
                  << "\nraw_records\t" << stats.raw_records << "\nrecords\t" << stats.records << '\n';
    }
    return 0;
}

struct SimArgs {
    std::string mode = "pair";
    std::string fasta, truth;
    SimConfig pair;
    GenomeSimConfig genome;
    double delta_m = -1, delta_g = -1;
};

int cmd_simulate(SimArgs a) {
    if (a.delta_m >= 0) a.pair.delta_m = a.delta_m;
    if (a.delta_g >= 0) a.pair.delta_g = a.delta_g;
    Genome genome;
    std::vector<TruthRecord> truths;
    if (a.mode == "pair") {
        for (std::uint64_t x = 0; x < a.pair.count; ++x) {
            auto sim = simulate_pair(a.pair, x);
            for (const auto& s : sim.genome) genome.add(s);
            truths.push_back(sim.truth);
        }
    } else if (a.mode == "genome") {
        a.genome.rng_seed = a.pair.rng_seed;
        auto sim = simulate_genome(a.genome);
        genome = std::move(sim.genome);
        truths = std::move(sim.truths);
    } else {
        throw std::invalid_argument("unknown mode '" + a.mode + "'");
    }
    auto fa = open_out(a.fasta);
    write_fasta(genome, fa);
    auto tr = open_out(a.truth);
    write_truth(truths, tr);
    return 0;
}

int cmd_score(const std::string& calls_path, const std::string& truth_path, double min_coverage, double bucket) {
    auto calls = read_bedpe(calls_path);
    auto in = open_in(truth_path);
    auto truths = read_truth(in);
    std::map<long, std::pair<std::size_t, std::size_t>> rows;
    std::size_t found = 0;
    for (const auto& t : truths) {
        const auto key = std::lround(std::ceil(t.target_delta / bucket - 1e-9));
        auto& row = rows[key];
        ++row.first;
        if (score_detection(t, calls, min_coverage)) {
            ++row.second;
            ++found;
        }
    }
    std::cout << "delta_max\ttruths\tdetected\tsensitivity\n";
    for (const auto& [key, row] : rows)
        std::cout << format_double(static_cast<double>(key) * bucket) << '\t' << row.first << '\t' << row.second
                  << '\t' << format_double(static_cast<double>(row.second) / static_cast<double>(row.first)) << '\n';
    std::cout << "all\t" << truths.size() << '\t' << found << '\t'
              << format_double(truths.empty() ? 0.0 : static_cast<double>(found) / static_cast<double>(truths.size()))
              << '\n';
    return 0;
}

std::uint64_t covered_bases(std::vector<Interval> ivs) {
    std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) { return position_less(a, b); });
    std::uint64_t total = 0;
    std::string name;
    std::uint64_t cur_end = 0;
    for (const auto& iv : ivs) {
        if (iv.seq_name != name) {
            name = iv.seq_name;
            cur_end = 0;
        }
        const auto start = std::max(iv.start, cur_end);
        if (iv.end > start) total += iv.end - start;
        cur_end = std::max(cur_end, iv.end);
    }
    return total;
}

int cmd_stats(const std::string& calls_path, int bins) {
    auto calls = read_bedpe(calls_path);
    std::vector<Interval> ivs;
    std::size_t inverted = 0;
    std::uint64_t aligned = 0;
    std::vector<std::size_t> hist(static_cast<std::size_t>(bins), 0);
    double max_err = 0;
    for (const auto& r : calls) max_err = std::max(max_err, r.error_total);
    const double width = max_err > 0 ? max_err / bins : 1.0;
    for (const auto& r : calls) {
        ivs.push_back(r.mate1);
        ivs.push_back(r.mate2);
        inverted += r.relative_strand() == Strand::reverse;
        aligned += r.alignment_length;
        auto b = static_cast<std::size_t>(r.error_total / width);
        hist[std::min<std::size_t>(b, hist.size() - 1)]++;
    }
    std::cout << "metric\tvalue\n";
    std::cout << "records\t" << calls.size() << '\n';
    std::cout << "direct\t" << calls.size() - inverted << '\n';
    std::cout << "inverted\t" << inverted << '\n';
    std::cout << "aligned_bp\t" << aligned << '\n';
    std::cout << "covered_bp\t" << covered_bases(ivs) << '\n';
    std::cout << "\nerror_from\terror_to\trecords\n";
    for (int b = 0; b < bins; ++b)
        std::cout << format_double(b * width) << '\t' << format_double((b + 1) * width) << '\t'
                  << hist[static_cast<std::size_t>(b)] << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sdscan: segmental duplication detection"};
    app.require_subcommand(1);

    RunConfig config;
    std::string fasta, out_path, checkpoint;
    bool no_reverse = false, no_qgram = false, show_stats = false;
    auto* search = app.add_subcommand("search", "find segmental duplications in a FASTA assembly");
    search->add_option("fasta", fasta, "input FASTA (optionally .gz)")->required()->check(CLI::ExistingFile);
    search->add_option("--delta", config.model.delta, "maximum edit error")->capture_default_str();
    auto* delta_m_opt = search->add_option("--delta-m", config.model.delta_m,
                                           "small-mutation share of delta (default min(0.15, 0.6 * delta))");
    search->add_option("--p-gap", config.model.p_gap, "per-base large gap probability")->capture_default_str();
    search->add_option("--k", config.seed_sketch.k, "seeding k-mer length")->capture_default_str();
    search->add_option("--anchor-k", config.anchor_k, "anchor k-mer length")->capture_default_str();
    search->add_option("--w", config.seed_sketch.w, "winnowing window")->capture_default_str();
    search->add_option("--q", config.q, "q-gram length")->capture_default_str();
    search->add_option("--window", config.seed_window, "seed window length")->capture_default_str();
    search->add_option("--x-drop", config.x_drop, "score drop ending chain-end extension")->capture_default_str();
    search->add_option("--masked-min", config.masked_unique_min, "unmasked bases required per mate")
        ->capture_default_str();
    search->add_option("--threads", config.threads, "worker threads")->capture_default_str();
    search->add_option("--out", out_path, "output BEDPE (default stdout)");
    search->add_option("--checkpoint", checkpoint, "directory for index and region checkpoints");
    search->add_flag("--no-reverse", no_reverse, "skip inverted duplications");
    search->add_flag("--no-qgram", no_qgram, "disable the q-gram filter");
    search->add_flag("--stats", show_stats, "print pipeline counters to stderr");

    SimArgs sim;
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic genome with planted SDs");
    simulate->add_option("--mode", sim.mode, "pair: one SD per backbone; genome: many SDs")->capture_default_str();
    simulate->add_option("--fasta", sim.fasta, "output FASTA")->required();
    simulate->add_option("--truth", sim.truth, "output truth BEDPE")->required();
    simulate->add_option("--seed", sim.pair.rng_seed, "RNG seed")->capture_default_str();
    simulate->add_option("--count", sim.pair.count, "pairs to generate (pair mode)")->capture_default_str();
    simulate->add_option("--delta", sim.pair.delta, "target error (pair mode)")->capture_default_str();
    simulate->add_option("--delta-m", sim.delta_m, "mutation budget (pair mode; drawn when unset)");
    simulate->add_option("--delta-g", sim.delta_g, "gap budget (pair mode; drawn when unset)");
    simulate->add_option("--min-backbone", sim.pair.min_backbone)->capture_default_str();
    simulate->add_option("--max-backbone", sim.pair.max_backbone)->capture_default_str();
    simulate->add_option("--inverted", sim.pair.inverted_fraction, "fraction of inverted copies (pair mode)")
        ->capture_default_str();
    simulate->add_option("--length", sim.genome.total_length, "genome length (genome mode)")->capture_default_str();
    simulate->add_option("--sequences", sim.genome.sequences, "sequences (genome mode)")->capture_default_str();
    simulate->add_option("--sds", sim.genome.sds, "planted SDs (genome mode)")->capture_default_str();
    simulate->add_option("--max-delta", sim.genome.max_delta, "largest SD error (genome mode)")->capture_default_str();

    std::string calls, truth;
    double min_coverage = 0.95, bucket = 0.05;
    auto* score = app.add_subcommand("score", "sensitivity of calls against a truth set, per delta bucket");
    score->add_option("calls", calls, "called BEDPE")->required()->check(CLI::ExistingFile);
    score->add_option("truth", truth, "truth BEDPE from simulate")->required()->check(CLI::ExistingFile);
    score->add_option("--coverage", min_coverage, "required coverage of both mates")->capture_default_str();
    score->add_option("--bucket", bucket, "delta bucket width")->capture_default_str();

    int bins = 10;
    std::string stats_calls;
    auto* stats = app.add_subcommand("stats", "summary tables for a BEDPE call set");
    stats->add_option("calls", stats_calls, "BEDPE file")->required()->check(CLI::ExistingFile);
    stats->add_option("--bins", bins, "error histogram bins")->capture_default_str()->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*search) {
            if (delta_m_opt->count() == 0) config.model.delta_m = std::min(0.15, 0.6 * config.model.delta);
            config.reverse_strand = !no_reverse;
            config.qgram_filter = !no_qgram;
            if (!checkpoint.empty()) config.checkpoint_dir = checkpoint;
            return cmd_search(fasta, config, out_path, show_stats);
        }
        if (*simulate) return cmd_simulate(sim);
        if (*score) return cmd_score(calls, truth, min_coverage, bucket);
        if (*stats) return cmd_stats(stats_calls, bins);
    } catch (const std::exception& e) {
        std::cerr << "sdscan: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
