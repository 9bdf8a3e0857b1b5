#include "sdscan/dna.hpp"

#include <algorithm>

namespace sdscan {

std::string reverse_complement(std::string_view s) {
    std::string out(s.size(), 'N');
    std::transform(s.rbegin(), s.rend(), out.begin(), complement);
    return out;
}

} // namespace sdscan
