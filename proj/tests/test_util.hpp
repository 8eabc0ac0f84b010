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

#include <algorithm>
#include <vector>

#include "gmfg/rng.hpp"
#include "gmfg/types.hpp"

namespace gmfg::test {

inline std::vector<double> random_simplex(Stream& stream, int n) {
  std::vector<double> v(n);
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    v[k] = 0.05 + stream.next_double();  // bounded away from zero
    sum += v[k];
  }
  for (double& x : v) x /= sum;
  return v;
}

inline PolicyProfile random_policy(Stream& stream, int cells, int horizon, int ns, int na) {
  PolicyProfile p(cells, horizon, ns, na);
  for (int i = 0; i < cells; ++i) {
    for (int h = 0; h < horizon; ++h) {
      for (int s = 0; s < ns; ++s) {
        auto v = random_simplex(stream, na);
        std::copy(v.begin(), v.end(), p.slice(i, h, s).begin());
      }
    }
  }
  return p;
}

inline DistributionFlow constant_flow(int cells, int horizon, const std::vector<double>& dist) {
  DistributionFlow f(cells, horizon, static_cast<int>(dist.size()));
  for (int i = 0; i < cells; ++i) {
    for (int h = 0; h < horizon; ++h) {
      for (size_t s = 0; s < dist.size(); ++s) f.at(i, h, static_cast<int>(s)) = dist[s];
    }
  }
  return f;
}

inline std::vector<int> random_permutation(Stream& stream, int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(stream.next_double() * (i + 1));
    if (j > i) j = i;
    std::swap(p[i], p[j]);
  }
  return p;
}

}  // namespace gmfg::test
