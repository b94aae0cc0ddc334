#pragma once

#include <cstdint>

namespace msfbm {

// Counter-based generator: every draw is a pure function of its key, so
// results do not depend on scheduling.
std::uint64_t hash64(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d);
double uniform01(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d);

struct NormalPair {
    double x, y;
};
NormalPair normal_pair(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

}  // namespace msfbm
