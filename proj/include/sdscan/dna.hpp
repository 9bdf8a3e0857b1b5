#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace sdscan {

/// 2-bit code of a normalized base; 4 for N.
constexpr std::uint8_t kBaseN = 4;

constexpr std::array<std::uint8_t, 256> make_base_codes() {
    std::array<std::uint8_t, 256> t{};
    for (auto& v : t) v = kBaseN;
    t['A'] = 0; t['C'] = 1; t['G'] = 2; t['T'] = 3;
    t['a'] = 0; t['c'] = 1; t['g'] = 2; t['t'] = 3;
    return t;
}

inline constexpr std::array<std::uint8_t, 256> kBaseCode = make_base_codes();

inline std::uint8_t base_code(char c) { return kBaseCode[static_cast<unsigned char>(c)]; }

inline char complement(char c) {
    switch (c) {
    case 'A': return 'T';
    case 'C': return 'G';
    case 'G': return 'C';
    case 'T': return 'A';
    case 'a': return 't';
    case 'c': return 'g';
    case 'g': return 'c';
    case 't': return 'a';
    default: return 'N';
    }
}

std::string reverse_complement(std::string_view s);

/// A<->G and C<->T substitutions.
inline bool is_transition(char a, char b) {
    auto x = base_code(a), y = base_code(b);
    if (x == kBaseN || y == kBaseN || x == y) return false;
    return (x ^ y) == 2;
}

} // namespace sdscan
