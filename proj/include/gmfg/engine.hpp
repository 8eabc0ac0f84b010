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

#include <utility>
#include <vector>

#include "gmfg/types.hpp"

namespace gmfg {

// All operations here are pure; per-cell loops are independent.

/// z_h^alpha as the midpoint-rule quadrature of the graphon-weighted flow:
/// z = (1/M) sum_j W(alpha_i, alpha_j) mu_h^{alpha_j}.
Aggregate compute_aggregate(const Graphon& w, const DistributionFlow& flow, int cell, int h);

/// Same quadrature for an arbitrary agent position in (0, 1].
Aggregate aggregate_at_position(const Graphon& w, const DistributionFlow& flow, double alpha,
                                int h);

/// Distribution flow induced by the policy: forward recursion whose
/// aggregates are recomputed from the evolving flow itself.
DistributionFlow gamma2(const PolicyProfile& policy, const GmfgModel& model);

/// Flow of implementing the policy on the MDP induced by ref_flow:
/// forward recursion with aggregates frozen to ref_flow.
DistributionFlow gamma3(const PolicyProfile& policy, const DistributionFlow& ref_flow,
                        const GmfgModel& model);

/// Entropy-regularized policy evaluation on the MDP induced by ref_flow,
/// for one agent cell. Backward recursion
///   Q_h = r + E[V_{h+1}],  V_h = <pi, Q_h - lambda log pi>,  Q_{H+1} = 0.
/// Rejects zero-probability actions when lambda > 0.
std::pair<QTable, VTable> evaluate_policy(const PolicyProfile& policy,
                                          const DistributionFlow& ref_flow,
                                          const GmfgModel& model, double lambda, int cell);

/// evaluate_policy for every cell.
std::vector<QTable> evaluate_policy_all(const PolicyProfile& policy,
                                        const DistributionFlow& ref_flow,
                                        const GmfgModel& model, double lambda);

struct SoftOptimal {
  PolicyProfile policy;
  std::vector<VTable> values;  // optimal value per cell
};

/// Gamma_1^lambda on the MDP induced by ref_flow, by backward soft DP:
///   pi*_h(a|s) proportional to exp(Q*_h(s,a)/lambda),
///   V*_h(s) = lambda log sum_a exp(Q*_h(s,a)/lambda).
SoftOptimal soft_optimal_policy(const DistributionFlow& ref_flow, const GmfgModel& model,
                                double lambda);

/// Grid-averaged exploitability
///   Delta(pi) = (1/M) sum_i [ sup_pi~ J^i(pi~, mu^pi) - J^i(pi^i, mu^pi) ],
/// with the sup computed exactly by soft DP.
double exploitability(const PolicyProfile& policy, const GmfgModel& model, double lambda);

/// D(pi, pi~) = (1/M) sum_i sum_h E_{s ~ ref_flow} || pi - pi~ ||_1.
double distance_D(const PolicyProfile& a, const PolicyProfile& b, const DistributionFlow& ref_flow);

/// d(mu, mu~) = (1/M) sum_i sum_h || mu_h^i - mu~_h^i ||_1.
double distance_d(const DistributionFlow& a, const DistributionFlow& b);

/// Block-bijection transport: objects indexed by cell i pick up index perm[i];
/// a graphon is composed with the interval permutation.
Graphon apply_block_bijection(const Graphon& w, const std::vector<int>& perm);
PolicyProfile apply_block_bijection(const PolicyProfile& p, const std::vector<int>& perm);
DistributionFlow apply_block_bijection(const DistributionFlow& f, const std::vector<int>& perm);

std::vector<int> inverse_permutation(const std::vector<int>& perm);

}  // namespace gmfg
