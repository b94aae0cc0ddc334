#include "msfbm/rng.hpp"

#include <cmath>
#include <numbers>

namespace msfbm {

namespace {

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t hash64(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    std::uint64_t h = splitmix(a);
    h = splitmix(h ^ b);
    h = splitmix(h ^ (c * 0xd6e8feb86659fd93ULL));
    h = splitmix(h ^ (d + 0x632be59bd9b4e019ULL));
    return h;
}

double uniform01(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    return (double(hash64(a, b, c, d) >> 11) + 0.5) * 0x1.0p-53;
}

NormalPair normal_pair(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    double u1 = uniform01(seed, stream, counter, 0);
    double u2 = uniform01(seed, stream, counter, 1);
    double r = std::sqrt(-2 * std::log(u1));
    double t = 2 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
}

}  // namespace msfbm
