#include "clmkl/random.hpp"

#include <limits>

namespace clmkl {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t deriveSeed(std::uint64_t base, SeedStream stream, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(stream)) ^ splitmix64(index + 1));
}

std::uint64_t uniformIndex(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return draw % bound;
}

}  // namespace clmkl
