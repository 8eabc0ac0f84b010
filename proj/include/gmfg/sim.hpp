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

#include <optional>
#include <vector>

#include "gmfg/dataset.hpp"
#include "gmfg/estimation.hpp"
#include "gmfg/ppo.hpp"
#include "gmfg/types.hpp"

namespace gmfg {

/// Population simulator request. SelfInduced plays the policy on the MDP
/// induced by its own flow (Gamma_2); InducedByFlow freezes the aggregates
/// to ref_flow (Gamma_3). Sampled agents are simulated independently with
/// aggregates read from the internally computed flow, never from peers'
/// realized states; rewards are the noiseless r*(s, a, z).
struct SimRequest {
  enum class Kind { kSelfInduced, kInducedByFlow };

  Kind kind = Kind::kSelfInduced;
  PolicyProfile policy;
  std::optional<DistributionFlow> ref_flow;
  PositionScheme scheme;
  int episodes = 1;
  uint64_t seed = 0;
  // Optional per-agent seeds; by default derived from `seed` by agent index.
  std::optional<std::vector<uint64_t>> agent_seeds;
  int policy_id = 0;

  void validate() const;
};

Dataset rollout(const SimRequest& req, const GmfgModel& model);

/// Configuration for the Algorithm-2 estimation oracle.
struct OracleConfig {
  int num_agents = 7;
  int episodes = 125;              // L per simulator call
  SchemeKind scheme = SchemeKind::kKnownGrid;
  CandidateSet candidates;
  FitOptions fit;                  // pooled is forced on (single policy per call)
  double behavior_uniform_mix = 1.0;  // pi_b = (1-mix) pi_t + mix Unif(A)
  double lambda = 1.0;
  bool reestimate = false;         // false: reuse the first model estimate
  uint64_t seed = 0;

  void validate() const;
};

struct Algorithm2Result {
  DistributionFlow mu_hat;         // flow of pi_t on the first model estimate
  DistributionFlow bar_next;       // (1-alpha) bar + alpha mu_hat
  std::vector<QTable> q_hat;       // policy evaluation on the second estimate
  EstimatedModel flow_model;       // fitted from the self-induced data
  EstimatedModel q_model;          // fitted from the induced-by-flow data
  Dataset flow_data;
  Dataset q_data;
};

/// One pass of the estimation oracle: roll out pi_t, fit a model, propagate
/// the flow on it; roll out the behavior policy on the MDP induced by
/// bar_flow, fit a second model with the known flow, evaluate pi_t on it.
/// The true model is touched only to generate data.
Algorithm2Result algorithm2_step(const PolicyProfile& pi_t, const DistributionFlow& bar_flow,
                                 const OracleConfig& cfg, const GmfgModel& model, int t,
                                 double alpha_t);

/// Oracle adapter for run_gmfg_ppo. With reestimate=false the model fitted
/// on the first call is reused for every later flow/Q request.
class Algorithm2Oracle : public Oracle {
 public:
  Algorithm2Oracle(OracleConfig cfg, const GmfgModel& model, std::vector<double> mu1);

  DistributionFlow estimate_flow(const PolicyProfile& policy) override;
  std::vector<QTable> estimate_q(const PolicyProfile& policy,
                                 const DistributionFlow& bar_flow) override;

  const EstimatedModel* cached_model() const { return cached_ ? &*cached_ : nullptr; }

 private:
  GmfgModel fitted_game(const EstimatedModel& est) const;
  PolicyProfile behavior_for(const PolicyProfile& policy) const;

  OracleConfig cfg_;
  const GmfgModel* model_;
  std::vector<double> mu1_;
  std::optional<EstimatedModel> cached_;
  uint64_t calls_ = 0;
};

/// Model-free baseline flow estimate: per grid block and step, the state
/// histogram of the resident sampled agent's episodes; empty blocks inherit
/// the nearest agent's histogram.
DistributionFlow empirical_flow_baseline(const Dataset& data, const StateActionSpace& space,
                                         int grid_cells);

/// Model-free baseline oracle: histogram flows and Monte Carlo regularized
/// returns in place of fitted models.
class EmpiricalBaselineOracle : public Oracle {
 public:
  EmpiricalBaselineOracle(int num_agents, int episodes, double lambda, uint64_t seed,
                          const GmfgModel& model);

  DistributionFlow estimate_flow(const PolicyProfile& policy) override;
  std::vector<QTable> estimate_q(const PolicyProfile& policy,
                                 const DistributionFlow& bar_flow) override;

 private:
  int num_agents_;
  int episodes_;
  double lambda_;
  uint64_t seed_;
  const GmfgModel* model_;
  uint64_t calls_ = 0;
};

}  // namespace gmfg
