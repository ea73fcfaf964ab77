#pragma once

#include <cstdint>
#include <random>

namespace stno {

/// Seeded Gaussian stream. One instance per simulation; never shared.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Standard normal draw.
  double gaussian() { return normal_(engine_); }

  /// Zero-mean normal draw with the given standard deviation.
  double gaussian(double sigma) { return sigma * normal_(engine_); }

  std::uint64_t integer() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// splitmix64 finalizer; decorrelates nearby seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for replica/channel k of a campaign with the given master seed.
/// Counter-based so any single replica is reproducible in isolation.
constexpr std::uint64_t replica_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(master_seed ^ splitmix64(index + 1));
}

}  // namespace stno
