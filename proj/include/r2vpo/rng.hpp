#pragma once

#include <cstdint>
#include <random>

namespace r2vpo {

using Rng = std::mt19937_64;

// Independent random streams derived from the single run seed.
//
// Every stream seed is splitmix64(seed ^ splitmix64(stream << 32 | index)),
// so per-env, per-shuffle and per-init randomness never share a generator
// and adding a stream does not perturb the others.
enum class Stream : std::uint64_t {
  kInit = 1,      // network weights
  kEnvReset = 2,  // index = env slot
  kAction = 3,    // exploration noise during collection
  kShuffle = 4,   // minibatch permutations
  kReplay = 5,    // replay sampling
  kEval = 6,      // evaluation episode starts
  kTest = 7,
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t split_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0);
Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

// One standard normal draw. No cached second variate is carried between
// calls, so the generator state alone determines the sequence.
double standard_normal(Rng& rng);
double uniform(Rng& rng, double low, double high);

}  // namespace r2vpo
