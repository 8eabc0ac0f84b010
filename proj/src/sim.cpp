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

#include "gmfg/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "gmfg/engine.hpp"

namespace gmfg {

void SimRequest::validate() const {
  scheme.validate();
  if (scheme.num_agents() < 2) throw std::invalid_argument("simulator needs N >= 2 agents");
  if (episodes < 1) throw std::invalid_argument("simulator needs L >= 1 episodes");
  if (kind == Kind::kInducedByFlow && !ref_flow) {
    throw std::invalid_argument("induced-by-flow request needs a reference flow");
  }
  if (agent_seeds && static_cast<int>(agent_seeds->size()) != scheme.num_agents()) {
    throw std::invalid_argument("agent seed count must equal agent count");
  }
}

Dataset rollout(const SimRequest& req, const GmfgModel& model) {
  req.validate();
  int n = req.scheme.num_agents();
  int H = model.horizon;
  int ns = model.space.num_states();
  if (req.policy.horizon() != H || req.policy.num_states() != ns ||
      req.policy.num_actions() != model.space.num_actions()) {
    throw std::invalid_argument("policy shape does not match model");
  }
  DistributionFlow flow = (req.kind == SimRequest::Kind::kSelfInduced)
                              ? gamma2(req.policy, model)
                              : gamma3(req.policy, *req.ref_flow, model);
  AgentGrid grid{req.policy.cells()};

  // Aggregates and rewards are functions of the flow only, so precompute
  // them per (agent, h); trajectories then depend only on their own stream.
  std::vector<std::vector<Aggregate>> agg(n, std::vector<Aggregate>(H));
  for (int i = 0; i < n; ++i) {
    for (int h = 0; h < H; ++h) {
      agg[i][h] = aggregate_at_position(model.graphons[h], flow, req.scheme.positions[i], h);
    }
  }

  Dataset data;
  data.scheme = req.scheme;
  data.horizon = H;
  data.episodes.assign(req.episodes, Episode{});
  std::vector<double> trans(ns);
  for (int tau = 0; tau < req.episodes; ++tau) {
    Episode& ep = data.episodes[tau];
    ep.policy_id = req.policy_id;
    ep.steps.assign(static_cast<size_t>(n) * H, StepRecord{});
    for (int i = 0; i < n; ++i) {
      uint64_t agent_key = req.agent_seeds ? (*req.agent_seeds)[i]
                                           : derive_key(req.seed, static_cast<uint64_t>(i));
      Stream stream(derive_key(agent_key, static_cast<uint64_t>(tau) + 1));
      int cell = grid.cell_of(req.scheme.positions[i]);
      int s = stream.sample(model.initial);
      for (int h = 0; h < H; ++h) {
        int a = stream.sample(req.policy.slice(cell, h, s));
        double r = model.reward(h, s, a, agg[i][h]);
        model.transition(h, s, a, agg[i][h], trans);
        int s_next = stream.sample(trans);
        StepRecord& rec = ep.steps[static_cast<size_t>(i) * H + h];
        rec.s = model.space.states[s];
        rec.a = a;
        rec.r = r;
        rec.s_next = model.space.states[s_next];
        s = s_next;
      }
    }
  }
  return data;
}

void OracleConfig::validate() const {
  if (num_agents < 2) throw std::invalid_argument("oracle needs N >= 2 agents");
  if (episodes < 1) throw std::invalid_argument("oracle needs L >= 1 episodes");
  if (behavior_uniform_mix < 0.0 || behavior_uniform_mix > 1.0) {
    throw std::invalid_argument("behavior mixture rate must lie in [0,1]");
  }
  if (scheme == SchemeKind::kUnknownGrid) {
    throw std::invalid_argument("the estimation oracle requires known positions");
  }
  if (candidates.graphons.empty()) throw std::invalid_argument("oracle candidate set is empty");
}

namespace {

PositionScheme make_scheme(SchemeKind kind, int n, uint64_t seed) {
  if (kind == SchemeKind::kKnownGrid) return PositionScheme::known_grid(n);
  Stream stream(derive_key(seed, 0x9a6e));
  return PositionScheme::known_random(n, stream);
}

PolicyProfile mix_with_uniform_policy(const PolicyProfile& policy, double mix) {
  return mix_uniform(policy, mix);
}

}  // namespace

Algorithm2Result algorithm2_step(const PolicyProfile& pi_t, const DistributionFlow& bar_flow,
                                 const OracleConfig& cfg, const GmfgModel& model, int t,
                                 double alpha_t) {
  cfg.validate();
  FitOptions opts = cfg.fit;
  opts.pooled = true;  // one policy per simulator call

  Algorithm2Result out;
  uint64_t step_key = derive_key(cfg.seed, static_cast<uint64_t>(t));

  SimRequest req;
  req.kind = SimRequest::Kind::kSelfInduced;
  req.policy = pi_t;
  req.scheme = make_scheme(cfg.scheme, cfg.num_agents, step_key);
  req.episodes = cfg.episodes;
  req.seed = derive_key(step_key, 1);
  out.flow_data = rollout(req, model);
  out.flow_model = fit(out.flow_data, model.space, cfg.candidates, opts);
  GmfgModel est_game = out.flow_model.to_gmfg_model(model.space, model.initial);
  out.mu_hat = gamma2(pi_t, est_game);
  out.bar_next = mix_flow(bar_flow, out.mu_hat, alpha_t);

  SimRequest breq;
  breq.kind = SimRequest::Kind::kInducedByFlow;
  breq.policy = mix_with_uniform_policy(pi_t, cfg.behavior_uniform_mix);
  breq.ref_flow = bar_flow;
  breq.scheme = req.scheme;
  breq.episodes = cfg.episodes;
  breq.seed = derive_key(step_key, 2);
  out.q_data = rollout(breq, model);
  out.q_model = fit_known_flow(out.q_data, model.space, bar_flow, cfg.candidates, opts);
  GmfgModel q_game = out.q_model.to_gmfg_model(model.space, model.initial);
  out.q_hat = evaluate_policy_all(pi_t, bar_flow, q_game, cfg.lambda);
  return out;
}

Algorithm2Oracle::Algorithm2Oracle(OracleConfig cfg, const GmfgModel& model,
                                   std::vector<double> mu1)
    : cfg_(std::move(cfg)), model_(&model), mu1_(std::move(mu1)) {
  cfg_.validate();
}

GmfgModel Algorithm2Oracle::fitted_game(const EstimatedModel& est) const {
  return est.to_gmfg_model(model_->space, mu1_);
}

PolicyProfile Algorithm2Oracle::behavior_for(const PolicyProfile& policy) const {
  return mix_with_uniform_policy(policy, cfg_.behavior_uniform_mix);
}

DistributionFlow Algorithm2Oracle::estimate_flow(const PolicyProfile& policy) {
  ++calls_;
  if (!cfg_.reestimate && cached_) return gamma2(policy, fitted_game(*cached_));
  FitOptions opts = cfg_.fit;
  opts.pooled = true;
  SimRequest req;
  req.kind = SimRequest::Kind::kSelfInduced;
  req.policy = policy;
  req.scheme = make_scheme(cfg_.scheme, cfg_.num_agents, derive_key(cfg_.seed, calls_));
  req.episodes = cfg_.episodes;
  req.seed = derive_key(cfg_.seed, calls_, 1);
  Dataset data = rollout(req, *model_);
  EstimatedModel est = fit(data, model_->space, cfg_.candidates, opts);
  DistributionFlow flow = gamma2(policy, fitted_game(est));
  cached_ = std::move(est);
  return flow;
}

std::vector<QTable> Algorithm2Oracle::estimate_q(const PolicyProfile& policy,
                                                 const DistributionFlow& bar_flow) {
  ++calls_;
  if (!cfg_.reestimate && cached_) {
    return evaluate_policy_all(policy, bar_flow, fitted_game(*cached_), cfg_.lambda);
  }
  FitOptions opts = cfg_.fit;
  opts.pooled = true;
  SimRequest req;
  req.kind = SimRequest::Kind::kInducedByFlow;
  req.policy = behavior_for(policy);
  req.ref_flow = bar_flow;
  req.scheme = make_scheme(cfg_.scheme, cfg_.num_agents, derive_key(cfg_.seed, calls_));
  req.episodes = cfg_.episodes;
  req.seed = derive_key(cfg_.seed, calls_, 2);
  Dataset data = rollout(req, *model_);
  EstimatedModel est = fit_known_flow(data, model_->space, bar_flow, cfg_.candidates, opts);
  return evaluate_policy_all(policy, bar_flow, fitted_game(est), cfg_.lambda);
}

DistributionFlow empirical_flow_baseline(const Dataset& data, const StateActionSpace& space,
                                         int grid_cells) {
  if (data.episodes.empty()) throw std::invalid_argument("empty dataset");
  if (data.scheme.kind != SchemeKind::kKnownGrid) {
    throw std::invalid_argument("baseline flow requires known grid positions");
  }
  int n = data.num_agents();
  int H = data.horizon;
  AgentGrid grid{grid_cells};
  DistributionFlow flow(grid_cells, H, space.num_states());
  // resident agent per block, or the nearest one
  std::vector<int> resident(grid_cells, -1);
  for (int c = 0; c < grid_cells; ++c) {
    double pos = grid.position(c);
    int best = 0;
    double best_dist = std::abs(data.scheme.positions[0] - pos);
    for (int i = 1; i < n; ++i) {
      double dist = std::abs(data.scheme.positions[i] - pos);
      if (dist < best_dist) {
        best_dist = dist;
        best = i;
      }
    }
    resident[c] = best;
  }
  double inv = 1.0 / data.num_episodes();
  for (int c = 0; c < grid_cells; ++c) {
    for (int h = 0; h < H; ++h) {
      for (int tau = 0; tau < data.num_episodes(); ++tau) {
        flow.at(c, h, space.state_index(data.at(tau, resident[c], h).s)) += inv;
      }
    }
  }
  return flow;
}

EmpiricalBaselineOracle::EmpiricalBaselineOracle(int num_agents, int episodes, double lambda,
                                                 uint64_t seed, const GmfgModel& model)
    : num_agents_(num_agents), episodes_(episodes), lambda_(lambda), seed_(seed), model_(&model) {}

DistributionFlow EmpiricalBaselineOracle::estimate_flow(const PolicyProfile& policy) {
  ++calls_;
  SimRequest req;
  req.kind = SimRequest::Kind::kSelfInduced;
  req.policy = policy;
  req.scheme = PositionScheme::known_grid(num_agents_);
  req.episodes = episodes_;
  req.seed = derive_key(seed_, calls_, 1);
  Dataset data = rollout(req, *model_);
  return empirical_flow_baseline(data, model_->space, policy.cells());
}

std::vector<QTable> EmpiricalBaselineOracle::estimate_q(const PolicyProfile& policy,
                                                        const DistributionFlow& bar_flow) {
  ++calls_;
  SimRequest req;
  req.kind = SimRequest::Kind::kInducedByFlow;
  req.policy = policy;
  req.ref_flow = bar_flow;
  req.scheme = PositionScheme::known_grid(num_agents_);
  req.episodes = episodes_;
  req.seed = derive_key(seed_, calls_, 2);
  Dataset data = rollout(req, *model_);

  int H = model_->horizon;
  int ns = model_->space.num_states();
  int na = model_->space.num_actions();
  AgentGrid grid{policy.cells()};
  // Monte Carlo every-visit Q: return-to-go with entropy corrections for
  // the steps after h. Unvisited pairs stay at zero.
  std::vector<QTable> q(policy.cells(), QTable(H, ns, na));
  std::vector<std::vector<double>> sums(policy.cells(),
                                        std::vector<double>(static_cast<size_t>(H) * ns * na, 0.0));
  std::vector<std::vector<double>> counts = sums;
  std::vector<int> agent_cell(num_agents_);
  for (int i = 0; i < num_agents_; ++i) agent_cell[i] = grid.cell_of(data.scheme.positions[i]);

  // nearest sampled agent per cell
  std::vector<int> resident(policy.cells());
  for (int c = 0; c < policy.cells(); ++c) {
    double pos = grid.position(c);
    int best = 0;
    double best_dist = std::abs(data.scheme.positions[0] - pos);
    for (int i = 1; i < num_agents_; ++i) {
      double dist = std::abs(data.scheme.positions[i] - pos);
      if (dist < best_dist) {
        best_dist = dist;
        best = i;
      }
    }
    resident[c] = best;
  }

  for (int c = 0; c < policy.cells(); ++c) {
    int i = resident[c];
    int pc = agent_cell[i];
    for (int tau = 0; tau < data.num_episodes(); ++tau) {
      // backward pass: G_h = r_h + sum_{m>h} (r_m - lambda log pi(a_m|s_m))
      double tail = 0.0;
      for (int h = H - 1; h >= 0; --h) {
        const StepRecord& rec = data.at(tau, i, h);
        int s = model_->space.state_index(rec.s);
        double g = rec.r + tail;
        size_t k = (static_cast<size_t>(h) * ns + s) * na + rec.a;
        sums[c][k] += g;
        counts[c][k] += 1.0;
        tail = g - lambda_ * std::log(policy.at(pc, h, s, rec.a));
      }
    }
    for (size_t k = 0; k < sums[c].size(); ++k) {
      if (counts[c][k] > 0.0) q[c].q[k] = sums[c][k] / counts[c][k];
    }
  }
  return q;
}

}  // namespace gmfg
