#include "r2vpo/rng.hpp"

namespace r2vpo {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t split_seed(std::uint64_t seed, Stream stream, std::uint64_t index) {
  const auto tag = (static_cast<std::uint64_t>(stream) << 32) | (index & 0xffffffffULL);
  return splitmix64(seed ^ splitmix64(tag));
}

Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index) {
  return Rng(split_seed(seed, stream, index));
}

double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

double uniform(Rng& rng, double low, double high) {
  std::uniform_real_distribution<double> dist(low, high);
  return dist(rng);
}

}  // namespace r2vpo
