#pragma once

#include "sdscan/genome_io.hpp"
#include "sdscan/simulate.hpp"

#include <random>
#include <string>
#include <vector>

namespace testutil {

inline std::string random_dna(std::mt19937_64& rng, std::size_t n) { return sdscan::random_bases(rng, n); }

inline sdscan::Sequence plain(std::string name, std::string bases) {
    sdscan::Sequence s;
    s.name = std::move(name);
    s.mask.assign(bases.size(), false);
    s.bases = std::move(bases);
    return s;
}

inline sdscan::Genome genome_of(std::vector<std::pair<std::string, std::string>> seqs) {
    sdscan::Genome g;
    for (auto& [name, bases] : seqs) g.add(plain(name, bases));
    return g;
}

} // namespace testutil
