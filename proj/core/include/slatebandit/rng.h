#ifndef SLATEBANDIT_RNG_H_
#define SLATEBANDIT_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace slatebandit {

using Rng = std::mt19937_64;

// Derives an independent seed for a sub-stream (splitmix64 mixing).
std::uint64_t SeedFor(std::uint64_t base, std::uint64_t stream);
std::uint64_t SeedFor(std::uint64_t base, std::uint64_t stream,
                      std::uint64_t substream);

// 64-bit FNV-1a. Stable across platforms and runs.
std::uint64_t StableHash(std::string_view text, std::uint64_t seed = 0);

// One draw from Beta(a, b), a, b > 0, clamped strictly inside (0, 1).
double SampleBeta(double a, double b, Rng& rng);

double SampleStandardNormal(Rng& rng);
double SampleUniform(Rng& rng);  // [0, 1)

}  // namespace slatebandit

#endif  // SLATEBANDIT_RNG_H_
