#pragma once

#include <cstdint>
#include <random>

namespace clmkl {

/// Derived seeds: every random consumer gets its own stream computed as
/// splitmix64(base ^ splitmix64(stream) ^ splitmix64(index + 1)), so restarts
/// and folds can be reproduced individually from the single run seed.
enum class SeedStream : std::uint64_t {
  kMeansRestart = 1,
  crossValidationFolds = 2,
  synthetic = 3,
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t deriveSeed(std::uint64_t base, SeedStream stream, std::uint64_t index);

/// Uniform integer in [0, bound) by rejection sampling. Unlike
/// std::uniform_int_distribution the result is identical across standard
/// library implementations.
std::uint64_t uniformIndex(std::mt19937_64& rng, std::uint64_t bound);

}  // namespace clmkl
