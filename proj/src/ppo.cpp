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

#include "gmfg/ppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gmfg {

double Schedules::alpha(int) const {
  double a = c_alpha * std::pow(static_cast<double>(iterations), -2.0 / 3.0);
  return std::clamp(a, 1e-12, 1.0);
}

double Schedules::beta(int) const {
  double b = c_beta / static_cast<double>(iterations);
  return std::clamp(b, 1e-12, 0.5);
}

void Schedules::validate() const {
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!(c_alpha > 0.0) || !(c_beta > 0.0)) throw std::invalid_argument("schedule constants must be > 0");
}

double Schedules::theory_eta(double lambda, int horizon, int num_actions) {
  double big_b = std::exp(horizon * (1.0 + lambda * std::log(num_actions)) / lambda);
  double g = std::log(big_b) / (big_b * (big_b - 1.0));
  double beta_star = (1.0 - g) * std::pow(g, horizon - 2) / (1.0 - std::pow(g, horizon - 1));
  double eta = beta_star / lambda;
  return std::max(eta, 1e-300);
}

void mirror_descent_step(std::span<const double> pi, std::span<const double> q, double eta,
                         double lambda, std::span<double> out) {
  if (pi.size() != q.size() || pi.size() != out.size()) {
    throw std::invalid_argument("mirror step size mismatch");
  }
  if (!(eta > 0.0) || !(lambda > 0.0)) throw std::invalid_argument("mirror step needs eta, lambda > 0");
  double denom = 1.0 + lambda * eta;
  double best = -std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < pi.size(); ++a) {
    if (!(pi[a] > 0.0)) throw std::invalid_argument("mirror step requires strictly positive policy");
    out[a] = (std::log(pi[a]) + eta * q[a]) / denom;
    best = std::max(best, out[a]);
  }
  double z = 0.0;
  for (size_t a = 0; a < pi.size(); ++a) {
    out[a] = std::exp(out[a] - best);
    z += out[a];
  }
  for (size_t a = 0; a < pi.size(); ++a) out[a] /= z;
}

std::vector<double> mirror_descent_step(std::span<const double> pi, std::span<const double> q,
                                        double eta, double lambda) {
  std::vector<double> out(pi.size());
  mirror_descent_step(pi, q, eta, lambda, out);
  return out;
}

PolicyProfile mirror_descent_step(const PolicyProfile& policy, const std::vector<QTable>& q,
                                  double eta, double lambda) {
  if (static_cast<int>(q.size()) != policy.cells()) {
    throw std::invalid_argument("per-cell Q table count mismatch");
  }
  PolicyProfile out(policy.cells(), policy.horizon(), policy.num_states(), policy.num_actions());
  for (int i = 0; i < policy.cells(); ++i) {
    for (int h = 0; h < policy.horizon(); ++h) {
      for (int s = 0; s < policy.num_states(); ++s) {
        mirror_descent_step(policy.slice(i, h, s), q[i].row(h, s), eta, lambda, out.slice(i, h, s));
      }
    }
  }
  return out;
}

PolicyProfile mix_uniform(const PolicyProfile& policy, double beta) {
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("beta must lie in [0,1]");
  PolicyProfile out = policy;
  double u = beta / policy.num_actions();
  for (double& x : out.raw()) x = (1.0 - beta) * x + u;
  return out;
}

DistributionFlow mix_flow(const DistributionFlow& bar, const DistributionFlow& next, double alpha) {
  if (!bar.same_shape(next)) throw std::invalid_argument("flow shape mismatch");
  if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("alpha must lie in (0,1]");
  DistributionFlow out = bar;
  const auto& n = next.raw();
  auto& o = out.raw();
  for (size_t k = 0; k < o.size(); ++k) o[k] = (1.0 - alpha) * o[k] + alpha * n[k];
  return out;
}

namespace {

void accumulate_mean(std::vector<double>& mean, const std::vector<double>& x, int count) {
  // running mean after `count` samples including x
  double w = 1.0 / count;
  for (size_t k = 0; k < mean.size(); ++k) mean[k] += w * (x[k] - mean[k]);
}

}  // namespace

RunHistory run_gmfg_ppo(Oracle& oracle, const Schedules& sched, int cells, int horizon,
                        int num_states, int num_actions, const PpoMetrics* metrics) {
  sched.validate();
  using clock = std::chrono::steady_clock;
  RunHistory hist;
  PolicyProfile pi = PolicyProfile::uniform(cells, horizon, num_states, num_actions);
  DistributionFlow bar_flow;
  PolicyProfile mean_pi = pi;
  DistributionFlow mean_flow;
  try {
    bar_flow = oracle.estimate_flow(pi);
  } catch (const std::exception& e) {
    throw std::runtime_error("gmfg-ppo init: " + std::string(e.what()));
  }
  mean_flow = bar_flow;
  for (int t = 1; t <= sched.iterations; ++t) {
    auto start = clock::now();
    DistributionFlow mu_t;
    std::vector<QTable> q_t;
    try {
      mu_t = oracle.estimate_flow(pi);
      q_t = oracle.estimate_q(pi, bar_flow);
    } catch (const std::exception& e) {
      throw std::runtime_error("gmfg-ppo iteration " + std::to_string(t) + ": " + e.what());
    }
    if (t == 1) {
      mean_pi = pi;
      mean_flow = bar_flow;
    } else {
      accumulate_mean(mean_pi.raw(), pi.raw(), t);
      accumulate_mean(mean_flow.raw(), bar_flow.raw(), t);
    }
    if (metrics && metrics->true_model) {
      hist.exploit.push_back(exploitability(pi, *metrics->true_model, metrics->lambda));
      if (metrics->reference) {
        hist.dist_D.push_back(distance_D(mean_pi, metrics->reference->policy, metrics->reference->flow));
        hist.dist_d.push_back(distance_d(mean_flow, metrics->reference->flow));
      }
    }
    DistributionFlow bar_next = mix_flow(bar_flow, mu_t, sched.alpha(t));
    PolicyProfile improved = mirror_descent_step(pi, q_t, sched.eta, sched.lambda);
    pi = mix_uniform(improved, sched.beta(t + 1));
    bar_flow = std::move(bar_next);
    hist.seconds.push_back(std::chrono::duration<double>(clock::now() - start).count());
  }
  hist.averaged_policy = std::move(mean_pi);
  hist.averaged_flow = std::move(mean_flow);
  hist.final_policy = std::move(pi);
  return hist;
}

}  // namespace gmfg
