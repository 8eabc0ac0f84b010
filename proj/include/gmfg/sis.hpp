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

#include <vector>

#include "gmfg/types.hpp"

namespace gmfg {

// Susceptible-infected-susceptible control game.
// States S -> 0, I -> 1; actions U (go out), D (keep distance).
//   P(S | I, ., .) = 0.2,  P(I | S, U, z) = 0.8 z(I),  P(I | S, D, .) = 0
//   r(s, a, z) = -10 [s = I] - 2.5 [a = D]
inline constexpr int kSisSusceptible = 0;
inline constexpr int kSisInfected = 1;
inline constexpr int kSisGoOut = 0;
inline constexpr int kSisDistance = 1;

GmfgModel make_sis_model(const Graphon& w, int horizon = 50,
                         std::vector<double> mu1 = {0.5, 0.5});

/// Same model with every graphon replaced (misspecification arms).
GmfgModel with_graphon(const GmfgModel& model, const Graphon& w);

/// Same model with rewards mapped affinely so [r_lo, r_hi] lands on [0, 1].
GmfgModel with_rewards_rescaled(const GmfgModel& model, double r_lo, double r_hi);

}  // namespace gmfg
