#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hybridcare {

/// SplitMix64 finaliser; used to derive independent seeds from structured keys.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for the stream named by (seed, parts...). Distinct keys give unrelated streams.
inline std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t part : parts) h = mix64(h ^ mix64(part));
  return h;
}

/// Independent random stream: a 64-bit Mersenne Twister plus the two
/// distributions the simulations need.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) : engine_(key) {}

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double exponential(double rate) { return std::exponential_distribution<double>(rate)(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace hybridcare
