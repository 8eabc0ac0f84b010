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

#include "gmfg/dataset.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

namespace gmfg {

using nlohmann::json;

std::string scheme_kind_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::kKnownGrid: return "known_grid";
    case SchemeKind::kKnownRandom: return "known_random";
    case SchemeKind::kUnknownGrid: return "unknown_grid";
  }
  return "?";
}

SchemeKind scheme_kind_from_name(const std::string& name) {
  if (name == "known_grid") return SchemeKind::kKnownGrid;
  if (name == "known_random") return SchemeKind::kKnownRandom;
  if (name == "unknown_grid") return SchemeKind::kUnknownGrid;
  throw std::invalid_argument("unknown position scheme: " + name);
}

PositionScheme PositionScheme::known_grid(int n) {
  if (n < 1) throw std::invalid_argument("scheme needs at least one agent");
  PositionScheme s;
  s.kind = SchemeKind::kKnownGrid;
  s.positions.resize(n);
  for (int i = 0; i < n; ++i) s.positions[i] = static_cast<double>(i + 1) / n;
  return s;
}

PositionScheme PositionScheme::known_random(int n, Stream& stream) {
  if (n < 1) throw std::invalid_argument("scheme needs at least one agent");
  PositionScheme s;
  s.kind = SchemeKind::kKnownRandom;
  s.positions.resize(n);
  for (int i = 0; i < n; ++i) {
    double p = stream.next_double();
    s.positions[i] = p > 0.0 ? p : 0.5;  // positions live in (0, 1]
  }
  return s;
}

PositionScheme PositionScheme::known_random(std::vector<double> positions) {
  PositionScheme s;
  s.kind = SchemeKind::kKnownRandom;
  s.positions = std::move(positions);
  s.validate();
  return s;
}

PositionScheme PositionScheme::unknown_grid(const std::vector<int>& slots) {
  check_block_bijection(slots);
  PositionScheme s;
  s.kind = SchemeKind::kUnknownGrid;
  int n = static_cast<int>(slots.size());
  s.positions.resize(n);
  for (int i = 0; i < n; ++i) s.positions[i] = static_cast<double>(slots[i] + 1) / n;
  return s;
}

void PositionScheme::validate() const {
  if (positions.empty()) throw std::invalid_argument("scheme has no agents");
  for (double p : positions) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("agent position outside (0,1]");
  }
  if (kind == SchemeKind::kKnownGrid || kind == SchemeKind::kUnknownGrid) {
    // positions must be exactly {i/N} as a set
    std::vector<double> sorted = positions;
    std::sort(sorted.begin(), sorted.end());
    int n = num_agents();
    for (int i = 0; i < n; ++i) {
      if (sorted[i] != static_cast<double>(i + 1) / n) {
        throw std::invalid_argument("grid scheme positions must be {i/N}");
      }
    }
  }
}

bool Dataset::single_policy() const {
  for (const Episode& e : episodes) {
    if (e.policy_id != episodes.front().policy_id) return false;
  }
  return true;
}

void Dataset::validate(const StateActionSpace& space) const {
  scheme.validate();
  if (horizon < 1) throw std::invalid_argument("dataset horizon must be >= 1");
  size_t expect = static_cast<size_t>(num_agents()) * horizon;
  for (const Episode& e : episodes) {
    if (e.steps.size() != expect) throw std::invalid_argument("episode step count mismatch");
    for (const StepRecord& rec : e.steps) {
      space.state_index(rec.s);
      space.state_index(rec.s_next);
      if (rec.a < 0 || rec.a >= space.num_actions()) {
        throw std::invalid_argument("action index out of range");
      }
    }
  }
}

std::string dataset_to_json(const Dataset& data, const StateActionSpace& space) {
  json j;
  j["scheme"] = {{"kind", scheme_kind_name(data.scheme.kind)}};
  j["positions"] = data.scheme.positions;
  json eps = json::array();
  for (const Episode& e : data.episodes) {
    json steps = json::array();
    for (int i = 0; i < data.num_agents(); ++i) {
      for (int h = 0; h < data.horizon; ++h) {
        const StepRecord& rec = e.steps[static_cast<size_t>(i) * data.horizon + h];
        steps.push_back({{"agent", i},
                         {"h", h + 1},
                         {"s", rec.s},
                         {"a", space.actions[rec.a]},
                         {"r", rec.r},
                         {"s_next", rec.s_next}});
      }
    }
    eps.push_back({{"policy_id", e.policy_id}, {"steps", std::move(steps)}});
  }
  j["episodes"] = std::move(eps);
  return j.dump(2);
}

Dataset dataset_from_json(const std::string& text, const StateActionSpace& space) {
  json j = json::parse(text);
  Dataset data;
  data.scheme.kind = scheme_kind_from_name(j.at("scheme").at("kind").get<std::string>());
  data.scheme.positions = j.at("positions").get<std::vector<double>>();
  int n = data.scheme.num_agents();
  int horizon = 0;
  for (const auto& step : j.at("episodes").at(0).at("steps")) {
    horizon = std::max(horizon, step.at("h").get<int>());
  }
  data.horizon = horizon;
  for (const auto& je : j.at("episodes")) {
    Episode e;
    e.policy_id = je.at("policy_id").get<int>();
    e.steps.assign(static_cast<size_t>(n) * horizon, StepRecord{});
    for (const auto& step : je.at("steps")) {
      int agent = step.at("agent").get<int>();
      int h = step.at("h").get<int>() - 1;
      if (agent < 0 || agent >= n || h < 0 || h >= horizon) {
        throw std::invalid_argument("dataset step index out of range");
      }
      StepRecord rec;
      rec.s = step.at("s").get<double>();
      rec.a = space.action_index(step.at("a").get<std::string>());
      rec.r = step.at("r").get<double>();
      rec.s_next = step.at("s_next").get<double>();
      e.steps[static_cast<size_t>(agent) * horizon + h] = rec;
    }
    data.episodes.push_back(std::move(e));
  }
  data.validate(space);
  return data;
}

}  // namespace gmfg
