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

#include "gmfg/sis.hpp"

#include <stdexcept>
#include <utility>

namespace gmfg {

GmfgModel make_sis_model(const Graphon& w, int horizon, std::vector<double> mu1) {
  GmfgModel m;
  m.space.states = {0.0, 1.0};
  m.space.actions = {"U", "D"};
  m.horizon = horizon;
  m.initial = std::move(mu1);
  m.graphons.assign(horizon, w);
  m.transition = [](int, int s, int a, const Aggregate& z, std::span<double> out) {
    if (s == kSisInfected) {
      out[kSisSusceptible] = 0.2;
      out[kSisInfected] = 0.8;
    } else {
      double infect = (a == kSisGoOut) ? 0.8 * z.mass[kSisInfected] : 0.0;
      out[kSisSusceptible] = 1.0 - infect;
      out[kSisInfected] = infect;
    }
  };
  m.reward = [](int, int s, int a, const Aggregate&) {
    return -10.0 * (s == kSisInfected) - 2.5 * (a == kSisDistance);
  };
  m.validate();
  return m;
}

GmfgModel with_graphon(const GmfgModel& model, const Graphon& w) {
  GmfgModel m = model;
  m.graphons.assign(model.horizon, w);
  return m;
}

GmfgModel with_rewards_rescaled(const GmfgModel& model, double r_lo, double r_hi) {
  if (!(r_hi > r_lo)) throw std::invalid_argument("reward range must be nonempty");
  GmfgModel m = model;
  RewardFn base = model.reward;
  double scale = 1.0 / (r_hi - r_lo);
  m.reward = [base, r_lo, scale](int h, int s, int a, const Aggregate& z) {
    return (base(h, s, a, z) - r_lo) * scale;
  };
  return m;
}

}  // namespace gmfg
