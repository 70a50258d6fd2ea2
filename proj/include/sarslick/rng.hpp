#ifndef SARSLICK_RNG_HPP
#define SARSLICK_RNG_HPP

#include <cstdint>
#include <random>

namespace sarslick {

// splitmix64 finalizer; used to derive independent streams from one seed so
// that execution order of parallel workers never influences results.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    return mix64(mix64(root) ^ mix64(stream + 0x165667b19e3779f9ULL));
}

inline std::mt19937_64 make_engine(std::uint64_t root, std::uint64_t stream) {
    return std::mt19937_64(derive_seed(root, stream));
}

}  // namespace sarslick

#endif
