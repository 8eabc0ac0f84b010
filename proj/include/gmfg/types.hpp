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

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmfg/graphon.hpp"

namespace gmfg {

inline constexpr double kSimplexTol = 1e-12;

/// Finite state/action sets. States are real scalars (regression targets),
/// actions are labels addressed by index.
struct StateActionSpace {
  std::vector<double> states;
  std::vector<std::string> actions;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_actions() const { return static_cast<int>(actions.size()); }

  int state_index(double value, double tol = 1e-9) const {
    for (int s = 0; s < num_states(); ++s) {
      if (std::abs(states[s] - value) <= tol) return s;
    }
    throw std::invalid_argument("state value not in space: " + std::to_string(value));
  }

  int action_index(const std::string& label) const {
    for (int a = 0; a < num_actions(); ++a) {
      if (actions[a] == label) return a;
    }
    throw std::invalid_argument("action label not in space: " + label);
  }

  void validate() const {
    if (states.empty() || actions.empty()) {
      throw std::invalid_argument("state/action space must be nonempty");
    }
    for (size_t i = 0; i < states.size(); ++i) {
      for (size_t j = i + 1; j < states.size(); ++j) {
        if (states[i] == states[j]) throw std::invalid_argument("duplicate state value");
      }
    }
  }
};

/// Uniform discretization of the agent continuum [0,1] into M cells with
/// midpoint positions. All policies and flows are piecewise constant per cell.
struct AgentGrid {
  int cells = 0;

  double position(int i) const { return (static_cast<double>(i) + 0.5) / cells; }

  // Right-closed cells ((c)/M, (c+1)/M]; positions in (0,1].
  int cell_of(double alpha) const {
    int c = static_cast<int>(std::ceil(alpha * cells)) - 1;
    if (c < 0) c = 0;
    if (c >= cells) c = cells - 1;
    return c;
  }
};

/// Graphon-weighted mixture of other agents' state distributions.
/// Total mass is at most 1 because graphons are bounded by 1.
struct Aggregate {
  std::vector<double> mass;

  double total() const {
    double t = 0.0;
    for (double m : mass) t += m;
    return t;
  }
};

/// Per-cell, per-step state distributions mu_h^alpha, h = 0..H-1.
class DistributionFlow {
 public:
  DistributionFlow() = default;
  DistributionFlow(int cells, int horizon, int num_states)
      : cells_(cells), horizon_(horizon), ns_(num_states),
        v_(static_cast<size_t>(cells) * horizon * num_states, 0.0) {}

  int cells() const { return cells_; }
  int horizon() const { return horizon_; }
  int num_states() const { return ns_; }

  double& at(int cell, int h, int s) { return v_[idx(cell, h, s)]; }
  double at(int cell, int h, int s) const { return v_[idx(cell, h, s)]; }

  std::span<double> slice(int cell, int h) { return {&v_[idx(cell, h, 0)], static_cast<size_t>(ns_)}; }
  std::span<const double> slice(int cell, int h) const {
    return {&v_[idx(cell, h, 0)], static_cast<size_t>(ns_)};
  }

  std::vector<double>& raw() { return v_; }
  const std::vector<double>& raw() const { return v_; }

  bool same_shape(const DistributionFlow& o) const {
    return cells_ == o.cells_ && horizon_ == o.horizon_ && ns_ == o.ns_;
  }

  void validate(double tol = kSimplexTol) const {
    for (int i = 0; i < cells_; ++i) {
      for (int h = 0; h < horizon_; ++h) {
        double sum = 0.0;
        for (int s = 0; s < ns_; ++s) {
          double p = at(i, h, s);
          if (p < -tol) throw std::invalid_argument("flow entry negative");
          sum += p;
        }
        if (std::abs(sum - 1.0) > tol) throw std::invalid_argument("flow slice does not sum to 1");
      }
    }
  }

 private:
  size_t idx(int cell, int h, int s) const {
    return (static_cast<size_t>(cell) * horizon_ + h) * ns_ + s;
  }
  int cells_ = 0, horizon_ = 0, ns_ = 0;
  std::vector<double> v_;
};

/// Per-cell, per-step conditional action distributions pi_h^alpha(a|s).
class PolicyProfile {
 public:
  PolicyProfile() = default;
  PolicyProfile(int cells, int horizon, int num_states, int num_actions)
      : cells_(cells), horizon_(horizon), ns_(num_states), na_(num_actions),
        v_(static_cast<size_t>(cells) * horizon * num_states * num_actions, 0.0) {}

  static PolicyProfile uniform(int cells, int horizon, int num_states, int num_actions) {
    PolicyProfile p(cells, horizon, num_states, num_actions);
    double u = 1.0 / num_actions;
    for (double& x : p.v_) x = u;
    return p;
  }

  int cells() const { return cells_; }
  int horizon() const { return horizon_; }
  int num_states() const { return ns_; }
  int num_actions() const { return na_; }

  double& at(int cell, int h, int s, int a) { return v_[idx(cell, h, s, a)]; }
  double at(int cell, int h, int s, int a) const { return v_[idx(cell, h, s, a)]; }

  std::span<double> slice(int cell, int h, int s) {
    return {&v_[idx(cell, h, s, 0)], static_cast<size_t>(na_)};
  }
  std::span<const double> slice(int cell, int h, int s) const {
    return {&v_[idx(cell, h, s, 0)], static_cast<size_t>(na_)};
  }

  std::vector<double>& raw() { return v_; }
  const std::vector<double>& raw() const { return v_; }

  bool same_shape(const PolicyProfile& o) const {
    return cells_ == o.cells_ && horizon_ == o.horizon_ && ns_ == o.ns_ && na_ == o.na_;
  }

  double min_prob() const {
    double m = 1.0;
    for (double x : v_) m = std::min(m, x);
    return m;
  }

  void validate(double tol = kSimplexTol) const {
    for (int i = 0; i < cells_; ++i) {
      for (int h = 0; h < horizon_; ++h) {
        for (int s = 0; s < ns_; ++s) {
          double sum = 0.0;
          for (int a = 0; a < na_; ++a) {
            double p = at(i, h, s, a);
            if (p < -tol) throw std::invalid_argument("policy entry negative");
            sum += p;
          }
          if (std::abs(sum - 1.0) > tol) throw std::invalid_argument("policy slice does not sum to 1");
        }
      }
    }
  }

 private:
  size_t idx(int cell, int h, int s, int a) const {
    return ((static_cast<size_t>(cell) * horizon_ + h) * ns_ + s) * na_ + a;
  }
  int cells_ = 0, horizon_ = 0, ns_ = 0, na_ = 0;
  std::vector<double> v_;
};

/// Action-value table Q_h(s,a) for a single agent cell, h = 0..H-1.
/// The Q_{H+1} == 0 terminal convention is implicit.
struct QTable {
  int horizon = 0, ns = 0, na = 0;
  std::vector<double> q;

  QTable() = default;
  QTable(int H, int num_states, int num_actions)
      : horizon(H), ns(num_states), na(num_actions),
        q(static_cast<size_t>(H) * num_states * num_actions, 0.0) {}

  double& at(int h, int s, int a) { return q[(static_cast<size_t>(h) * ns + s) * na + a]; }
  double at(int h, int s, int a) const { return q[(static_cast<size_t>(h) * ns + s) * na + a]; }
  std::span<const double> row(int h, int s) const {
    return {&q[(static_cast<size_t>(h) * ns + s) * na], static_cast<size_t>(na)};
  }
};

/// State-value table V_h(s) for a single agent cell.
struct VTable {
  int horizon = 0, ns = 0;
  std::vector<double> v;

  VTable() = default;
  VTable(int H, int num_states)
      : horizon(H), ns(num_states), v(static_cast<size_t>(H) * num_states, 0.0) {}

  double& at(int h, int s) { return v[static_cast<size_t>(h) * ns + s]; }
  double at(int h, int s) const { return v[static_cast<size_t>(h) * ns + s]; }
};

/// Transition writes P_h(.|s,a,z) into `out` (size |S|); must be a probability
/// vector. Reward returns r_h(s,a,z). Step index h is 0-based.
using TransitionFn = std::function<void(int h, int s, int a, const Aggregate& z, std::span<double> out)>;
using RewardFn = std::function<double(int h, int s, int a, const Aggregate& z)>;

/// The game (S, A, mu1, H, P*, r*, W*). The regularization weight lives in
/// callers; the agent grid lives in the flow/policy objects.
struct GmfgModel {
  StateActionSpace space;
  int horizon = 0;
  std::vector<double> initial;      // mu1, identical for all agents
  TransitionFn transition;
  RewardFn reward;
  std::vector<Graphon> graphons;    // one per step h

  void validate() const {
    space.validate();
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (static_cast<int>(initial.size()) != space.num_states()) {
      throw std::invalid_argument("initial distribution size mismatch");
    }
    double sum = 0.0;
    for (double p : initial) {
      if (p < 0.0) throw std::invalid_argument("initial distribution negative entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSimplexTol) throw std::invalid_argument("initial distribution does not sum to 1");
    if (static_cast<int>(graphons.size()) != horizon) {
      throw std::invalid_argument("graphon count must equal horizon");
    }
    if (!transition || !reward) throw std::invalid_argument("transition/reward not set");
  }
};

}  // namespace gmfg
