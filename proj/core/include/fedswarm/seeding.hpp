#pragma once

#include <cstdint>

namespace fedswarm {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Independent per-purpose generator seeds: every (stream, index) pair gets its own
/// sequence, so changing how often one stream is consumed never shifts another.
enum class SeedStream : std::uint64_t {
    Environment = 1,
    Exploration = 2,
    Sampling = 3,
    ActorInit = 4,
    CriticInit = 5,
    Evaluation = 6,
};

constexpr std::uint64_t derive_seed(std::uint64_t base, SeedStream stream, std::uint64_t index = 0) {
    return mix64(mix64(mix64(base) ^ static_cast<std::uint64_t>(stream)) + index);
}

}  // namespace fedswarm
