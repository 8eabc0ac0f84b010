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

#include <string>
#include <vector>

#include "gmfg/rng.hpp"
#include "gmfg/types.hpp"

namespace gmfg {

enum class SchemeKind { kKnownGrid, kKnownRandom, kUnknownGrid };

std::string scheme_kind_name(SchemeKind kind);
SchemeKind scheme_kind_from_name(const std::string& name);

/// Positions of the N sampled agents. Grid schemes place agent i at (i+1)/N.
/// For kUnknownGrid the stored positions are the generating assignment; they
/// are ground truth for evaluation only and estimators must not read them.
struct PositionScheme {
  SchemeKind kind = SchemeKind::kKnownGrid;
  std::vector<double> positions;

  int num_agents() const { return static_cast<int>(positions.size()); }

  static PositionScheme known_grid(int n);
  static PositionScheme known_random(int n, Stream& stream);
  static PositionScheme known_random(std::vector<double> positions);
  // slots[i] is the hidden grid slot of agent i; position (slots[i]+1)/n.
  static PositionScheme unknown_grid(const std::vector<int>& slots);

  void validate() const;
};

/// One (s, a, r, s') tuple. States as scalar values, actions as indices.
struct StepRecord {
  double s = 0.0;
  int a = 0;
  double r = 0.0;
  double s_next = 0.0;
};

/// One trajectory of all sampled agents, agent-major: steps[agent * H + h].
struct Episode {
  int policy_id = 0;
  std::vector<StepRecord> steps;
};

struct Dataset {
  PositionScheme scheme;
  int horizon = 0;
  std::vector<Episode> episodes;

  int num_agents() const { return scheme.num_agents(); }
  int num_episodes() const { return static_cast<int>(episodes.size()); }

  const StepRecord& at(int episode, int agent, int h) const {
    return episodes[episode].steps[static_cast<size_t>(agent) * horizon + h];
  }
  StepRecord& at(int episode, int agent, int h) {
    return episodes[episode].steps[static_cast<size_t>(agent) * horizon + h];
  }

  bool single_policy() const;
  void validate(const StateActionSpace& space) const;
};

std::string dataset_to_json(const Dataset& data, const StateActionSpace& space);
Dataset dataset_from_json(const std::string& text, const StateActionSpace& space);

}  // namespace gmfg
