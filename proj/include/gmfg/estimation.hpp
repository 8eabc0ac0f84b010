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

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gmfg/dataset.hpp"
#include "gmfg/types.hpp"

namespace gmfg {

// Model, reward, and graphon estimation from sampled-agent trajectories.
//
// The inner kernel is a product of exact indicators on (s, a, s'), so the
// mean-embedding of delta_s x delta_a x z is a finite vector: the (s, a)
// block carries z, every other block is zero. Transition and reward heads
// are kernel ridge regressions with a Gaussian kernel on that feature;
// graphon candidates (and agent permutations, when positions are unknown)
// are searched exhaustively and scored by the summed empirical square loss.

/// Feature layout: dim |S|*|A|*|S|, block (s*|A| + a) holds the aggregate.
int feature_dim(const StateActionSpace& space);
std::vector<double> make_feature(int s, int a, std::span<const double> z,
                                 const StateActionSpace& space);

/// hat z = 1/(N-1) sum_{j != i} W(xi_i, xi_j) delta_{s_j}.
Aggregate empirical_aggregate(const Graphon& w, std::span<const double> positions,
                              std::span<const int> state_indices, int agent, int num_states);
Aggregate empirical_aggregate(const Graphon& w, const PositionScheme& scheme,
                              std::span<const int> state_indices, int agent, int num_states);

/// Mean-embedding of agent `agent` at (episode, h). Pooled averages the
/// peers' states over all episodes (requires a single behavior policy).
/// `perm` supplies candidate grid slots when positions are unknown.
std::vector<double> embed(const Graphon& w, const Dataset& data, const StateActionSpace& space,
                          int agent, int episode, int h, bool pooled = false,
                          const std::vector<int>* perm = nullptr);

enum class NextStateMode { kSimplexHeads, kScalar };

struct CandidateSet {
  std::vector<Graphon> graphons;
  double ridge = 1e-3;                 // rho_reg > 0
  std::optional<double> bandwidth;     // Gaussian kernel width; default median heuristic
};

struct FitOptions {
  NextStateMode mode = NextStateMode::kSimplexHeads;
  bool pooled = false;
};

/// One Gaussian kernel ridge machine f(x) = sum_k coef_k exp(-|x-p_k|^2 / 2bw^2).
struct RidgeHead {
  std::vector<std::vector<double>> points;
  std::vector<double> coef;
  double bandwidth = 1.0;

  double predict(std::span<const double> x) const;
};

struct StepFit {
  std::vector<RidgeHead> next_heads;  // |S| heads (simplex mode) or 1 (scalar mode)
  RidgeHead reward_head;
};

struct EstimatedModel {
  NextStateMode mode = NextStateMode::kSimplexHeads;
  int num_states = 0, num_actions = 0, horizon = 0;
  std::vector<StepFit> steps;                    // per h
  std::vector<Graphon> graphons;                 // selected W_h (permutation folded in)
  std::vector<int> selected_per_step;            // candidate index per h
  std::vector<std::vector<int>> perm_per_step;   // selected slots per h (identity when known)
  int selected_overall = 0;                      // argmin of summed losses
  std::vector<int> permutation;                  // overall recovered slots (identity when known)
  std::vector<std::vector<double>> losses;       // [h][candidate]; unknown: min over perms
  std::vector<double> total_losses;              // [candidate]
  // unknown-position search diagnostics: [perm (lex order)][candidate] summed loss
  std::vector<std::vector<double>> perm_total_losses;

  /// Deployable game with predicted transitions (clipped to zero and
  /// renormalized onto the simplex) and predicted rewards. Simplex mode only.
  GmfgModel to_gmfg_model(const StateActionSpace& space, std::vector<double> mu1) const;
};

/// Joint estimation with known positions: exhaustive loop over graphon
/// candidates, closed-form ridge fits inside, lowest-index tie break.
EstimatedModel fit(const Dataset& data, const StateActionSpace& space, const CandidateSet& cands,
                   const FitOptions& opts = {});

/// Unknown grid positions: additionally searches all N! slot assignments
/// (N <= 8); ties prefer the lexicographically smallest permutation, then
/// the lowest candidate index. Embeddings are pooled by construction.
EstimatedModel fit_unknown(const Dataset& data, const StateActionSpace& space,
                           const CandidateSet& cands, const FitOptions& opts = {});

/// Known positions and known distribution flow: embeddings use exact grid
/// quadrature of ref_flow instead of empirical peer aggregates.
EstimatedModel fit_known_flow(const Dataset& data, const StateActionSpace& space,
                              const DistributionFlow& ref_flow, const CandidateSet& cands,
                              const FitOptions& opts = {});

std::vector<std::vector<int>> all_permutations(int n);

std::string estimated_model_to_json(const EstimatedModel& model);
EstimatedModel estimated_model_from_json(const std::string& text);

// ---- Risk functionals (exact expectations; finite S, A make them sums) ----

struct StepPredictor {
  NextStateMode mode = NextStateMode::kSimplexHeads;
  // writes |S| values (simplex mode) or 1 (scalar mode)
  std::function<void(std::span<const double> feature, std::span<double> out)> next;
  std::function<double(std::span<const double> feature)> reward;
};

StepPredictor predictor_from_model(const EstimatedModel& model, int h);
/// The conditional-mean predictor of the true model; decodes (s, a, z) from
/// the feature's nonzero block.
StepPredictor truth_predictor(const GmfgModel& model, int h, NextStateMode mode);

/// Risk given the sampled positions: average over behaviors and agents of
/// E[(s' - f(omega(W)))^2 + (r - g(omega(W)))^2], with (s, a, s', r) drawn
/// from the true model under each behavior's own flow.
double risk_conditional(const StepPredictor& pred, const Graphon& w, const GmfgModel& truth,
                        std::span<const PolicyProfile> behaviors, const PositionScheme& scheme,
                        int h);

/// Position-averaged risk: grid quadrature over alpha of the same integrand.
double risk_population(const StepPredictor& pred, const Graphon& w, const GmfgModel& truth,
                       std::span<const PolicyProfile> behaviors, int grid_cells, int h);

/// Minimum of the conditional risk over block permutations of W (N <= 8).
double risk_perm_invariant(const StepPredictor& pred, const Graphon& w, const GmfgModel& truth,
                           std::span<const PolicyProfile> behaviors, const PositionScheme& scheme,
                           int h);

/// Mean over steps of the per-step conditional risk of a fitted model,
/// evaluated with its own selected graphons.
double model_risk_conditional(const EstimatedModel& model, const GmfgModel& truth,
                              std::span<const PolicyProfile> behaviors,
                              const PositionScheme& scheme);

}  // namespace gmfg
