#include "fbcool/rng.hpp"

namespace fbcool {

namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) noexcept {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t split_seed(std::uint64_t master, std::string_view label) noexcept {
    return mix(mix(master) ^ fnv1a64(label));
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix(mix(master) ^ mix(index + 0x632be59bd9b4e019ULL));
}

}  // namespace fbcool
