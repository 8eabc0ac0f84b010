// Copyright 2026 The graphon-mfg-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

namespace gmfg {

// splitmix64. Keyed substreams make parallel and serial rollouts
// bit-identical: the stream for (agent, episode) depends only on the keys,
// never on scheduling order.
class Stream {
 public:
  explicit Stream(uint64_t key) : state_(key) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Categorical draw by CDF walk; probs need not be exactly normalized.
  int sample(std::span<const double> probs) {
    double u = next_double();
    double acc = 0.0;
    int n = static_cast<int>(probs.size());
    for (int k = 0; k < n; ++k) {
      acc += probs[k];
      if (u < acc) return k;
    }
    return n - 1;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  uint64_t state_;
};

inline uint64_t mix_key(uint64_t x) {
  x = (x ^ (x >> 33)) * 0xFF51AFD7ED558CCDULL;
  x = (x ^ (x >> 33)) * 0xC4CEB9FE1A85EC53ULL;
  return x ^ (x >> 33);
}

inline uint64_t derive_key(uint64_t root, uint64_t a) { return mix_key(root ^ mix_key(a + 1)); }

inline uint64_t derive_key(uint64_t root, uint64_t a, uint64_t b) {
  return derive_key(derive_key(root, a), b);
}

}  // namespace gmfg
