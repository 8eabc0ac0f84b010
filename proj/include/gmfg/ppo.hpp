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

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "gmfg/engine.hpp"
#include "gmfg/types.hpp"

namespace gmfg {

/// Step-size schedules for GMFG-PPO. Defaults follow the T^{-2/3} / T^{-1}
/// rates, clipped into valid ranges for small T; eta is a constant.
struct Schedules {
  int iterations = 100;   // T
  double c_alpha = 1.0;   // alpha_t = clip(c_alpha * T^{-2/3}, (0, 1])
  double c_beta = 1.0;    // beta_t  = clip(c_beta / T, (0, 1/2])
  double eta = 1.0;
  double lambda = 1.0;

  double alpha(int t) const;
  double beta(int t) const;
  void validate() const;

  /// The analysis-backed constant step, via 1 + lambda*eta = 1/theta* with
  /// theta* = 1/(1 + beta*), beta* = (1-g) g^{H-2} / (1 - g^{H-1}) and
  /// g = log(B) / (B(B-1)), B = exp(H(1 + lambda log|A|)/lambda).
  /// Vanishingly small for realistic horizons; exposed as a preset only.
  static double theory_eta(double lambda, int horizon, int num_actions);
};

/// Supplies the flow and action-value estimates consumed by the loop.
/// Exact oracles wrap the true model; sampled oracles live in the sim module.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual DistributionFlow estimate_flow(const PolicyProfile& policy) = 0;
  virtual std::vector<QTable> estimate_q(const PolicyProfile& policy,
                                         const DistributionFlow& bar_flow) = 0;
};

/// Gamma_2 / policy evaluation on a known model.
class ExactOracle : public Oracle {
 public:
  ExactOracle(const GmfgModel& model, double lambda) : model_(&model), lambda_(lambda) {}
  DistributionFlow estimate_flow(const PolicyProfile& policy) override {
    return gamma2(policy, *model_);
  }
  std::vector<QTable> estimate_q(const PolicyProfile& policy,
                                 const DistributionFlow& bar_flow) override {
    return evaluate_policy_all(policy, bar_flow, *model_, lambda_);
  }

 private:
  const GmfgModel* model_;
  double lambda_;
};

struct ReferencePair {
  PolicyProfile policy;  // pi*
  DistributionFlow flow; // mu*
};

/// Per-iteration metrics are computed on the true model; D and d are
/// measured from the running averages to a caller-supplied reference.
struct PpoMetrics {
  const GmfgModel* true_model = nullptr;
  double lambda = 1.0;
  const ReferencePair* reference = nullptr;
};

struct RunHistory {
  std::vector<double> exploit;   // Delta(pi_t), empty without a metrics model
  std::vector<double> dist_D;    // D(mean pi_{1..t}, pi*), empty without reference
  std::vector<double> dist_d;    // d(mean bar_mu_{1..t}, mu*)
  std::vector<double> seconds;   // wall-clock per iteration
  PolicyProfile averaged_policy;     // Unif(pi_{1:T})
  DistributionFlow averaged_flow;    // Unif(bar_mu_{1:T})
  PolicyProfile final_policy;        // pi_{T+1}
};

/// Closed-form mirror-descent step on one action distribution:
///   out proportional to pi^{1/(1+lambda eta)} exp(eta/(1+lambda eta) q).
/// Invariant under q -> q + c; rejects zero entries in pi.
void mirror_descent_step(std::span<const double> pi, std::span<const double> q, double eta,
                         double lambda, std::span<double> out);
std::vector<double> mirror_descent_step(std::span<const double> pi, std::span<const double> q,
                                        double eta, double lambda);

/// Mirror step applied across every (cell, h, s).
PolicyProfile mirror_descent_step(const PolicyProfile& policy, const std::vector<QTable>& q,
                                  double eta, double lambda);

/// (1 - beta) pi + beta Unif(A); every output entry is >= beta/|A|.
PolicyProfile mix_uniform(const PolicyProfile& policy, double beta);

/// Fictitious-play mixing (1 - alpha) bar + alpha next.
DistributionFlow mix_flow(const DistributionFlow& bar, const DistributionFlow& next, double alpha);

/// GMFG-PPO: init uniform, then per iteration estimate flow and Q, mix the
/// flow, take the mirror step, and mix with uniform; outputs the uniform
/// averages over iterates. Oracle failures are rethrown with the iteration
/// index attached.
RunHistory run_gmfg_ppo(Oracle& oracle, const Schedules& sched, int cells, int horizon,
                        int num_states, int num_actions, const PpoMetrics* metrics = nullptr);

}  // namespace gmfg
