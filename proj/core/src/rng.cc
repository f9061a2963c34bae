#include "slatebandit/rng.h"

#include <cmath>
#include <limits>

namespace slatebandit {

namespace {

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t SeedFor(std::uint64_t base, std::uint64_t stream) {
  return SplitMix(SplitMix(base) ^ (stream * 0xd1b54a32d192ed03ULL));
}

std::uint64_t SeedFor(std::uint64_t base, std::uint64_t stream,
                      std::uint64_t substream) {
  return SeedFor(SeedFor(base, stream), substream);
}

std::uint64_t StableHash(std::string_view text, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ SplitMix(seed);
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double SampleBeta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  double v = x / (x + y);
  constexpr double kLo = std::numeric_limits<double>::min();
  constexpr double kHi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  if (!(v > kLo)) v = kLo;
  if (v > kHi) v = kHi;
  return v;
}

double SampleStandardNormal(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return normal(rng);
}

double SampleUniform(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return unif(rng);
}

}  // namespace slatebandit
