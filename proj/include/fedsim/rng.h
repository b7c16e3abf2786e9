// Copyright 2026 The FedSim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FEDSIM_RNG_H_
#define FEDSIM_RNG_H_

#include <cstdint>
#include <initializer_list>

namespace fedsim {

// SplitMix64 finalizer. Bijective 64-bit avalanche mix.
constexpr uint64_t Mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds a tuple of integers into one stream key. Distinct tuples give
// unrelated keys, so every (round, client, epoch) owns its own stream.
inline uint64_t DeriveSeed(uint64_t master, std::initializer_list<uint64_t> tags) {
  uint64_t h = Mix64(master ^ 0x6a09e667f3bcc909ULL);
  for (uint64_t t : tags) {
    h = Mix64(h + 0x9e3779b97f4a7c15ULL + Mix64(t));
  }
  return h;
}

// Stream tags separating the purposes a master seed is used for.
enum class StreamTag : uint64_t {
  kSampling = 1,
  kPermutation = 2,
  kMomentumInit = 3,
  kOutputSelection = 4,
};

// Counter-based generator: the n-th output is Mix64(key + n * gamma).
// Output is fully specified here, so runs are reproducible across
// standard libraries (std:: distributions are not).
class Rng {
 public:
  explicit Rng(uint64_t key) : state_(key) {}

  uint64_t NextU64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return Mix64(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  uint64_t Below(uint64_t bound) {
    const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % bound);
    uint64_t v;
    do {
      v = NextU64();
    } while (v >= limit);
    return v % bound;
  }

  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  uint64_t state_;
};

}  // namespace fedsim

#endif  // FEDSIM_RNG_H_
