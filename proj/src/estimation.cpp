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

#include "gmfg/estimation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "gmfg/engine.hpp"
#include "gmfg/json_util.hpp"
#include "json.hpp"

namespace gmfg {

using nlohmann::json;

int feature_dim(const StateActionSpace& space) {
  return space.num_states() * space.num_actions() * space.num_states();
}

std::vector<double> make_feature(int s, int a, std::span<const double> z,
                                 const StateActionSpace& space) {
  int ns = space.num_states();
  int na = space.num_actions();
  std::vector<double> x(static_cast<size_t>(ns) * na * ns, 0.0);
  size_t off = (static_cast<size_t>(s) * na + a) * ns;
  for (int sp = 0; sp < ns; ++sp) x[off + sp] = z[sp];
  return x;
}

Aggregate empirical_aggregate(const Graphon& w, std::span<const double> positions,
                              std::span<const int> state_indices, int agent, int num_states) {
  int n = static_cast<int>(positions.size());
  if (n < 2) throw std::invalid_argument("empirical aggregate needs at least 2 agents");
  if (agent < 0 || agent >= n) throw std::out_of_range("agent index out of range");
  if (state_indices.size() != positions.size()) {
    throw std::invalid_argument("state count must match agent count");
  }
  Aggregate z;
  z.mass.assign(num_states, 0.0);
  double inv = 1.0 / (n - 1);
  for (int j = 0; j < n; ++j) {
    if (j == agent) continue;
    z.mass[state_indices[j]] += inv * w(positions[agent], positions[j]);
  }
  return z;
}

Aggregate empirical_aggregate(const Graphon& w, const PositionScheme& scheme,
                              std::span<const int> state_indices, int agent, int num_states) {
  if (scheme.kind == SchemeKind::kUnknownGrid) {
    throw std::invalid_argument("positions unknown; supply a slot assignment");
  }
  return empirical_aggregate(w, scheme.positions, state_indices, agent, num_states);
}

std::vector<double> embed(const Graphon& w, const Dataset& data, const StateActionSpace& space,
                          int agent, int episode, int h, bool pooled,
                          const std::vector<int>* perm) {
  int n = data.num_agents();
  int ns = space.num_states();
  std::vector<double> positions;
  if (perm != nullptr) {
    if (data.scheme.kind != SchemeKind::kUnknownGrid) {
      throw std::invalid_argument("slot assignment only applies to unknown positions");
    }
    check_block_bijection(*perm);
    if (static_cast<int>(perm->size()) != n) {
      throw std::invalid_argument("slot assignment size must equal agent count");
    }
    positions.resize(n);
    for (int i = 0; i < n; ++i) positions[i] = static_cast<double>((*perm)[i] + 1) / n;
  } else {
    if (data.scheme.kind == SchemeKind::kUnknownGrid) {
      throw std::invalid_argument("positions unknown; supply a slot assignment");
    }
    positions = data.scheme.positions;
  }
  if (pooled && !data.single_policy()) {
    throw std::invalid_argument("pooled embedding requires a single behavior policy");
  }
  const StepRecord& own = data.at(episode, agent, h);
  int s = space.state_index(own.s);
  Aggregate z;
  z.mass.assign(ns, 0.0);
  double inv = 1.0 / (n - 1);
  if (n < 2) throw std::invalid_argument("embedding needs at least 2 agents");
  if (pooled) {
    double invl = inv / data.num_episodes();
    for (int j = 0; j < n; ++j) {
      if (j == agent) continue;
      double wij = w(positions[agent], positions[j]);
      for (int tau = 0; tau < data.num_episodes(); ++tau) {
        z.mass[space.state_index(data.at(tau, j, h).s)] += invl * wij;
      }
    }
  } else {
    for (int j = 0; j < n; ++j) {
      if (j == agent) continue;
      z.mass[space.state_index(data.at(episode, j, h).s)] += inv * w(positions[agent], positions[j]);
    }
  }
  return make_feature(s, own.a, z.mass, space);
}

double RidgeHead::predict(std::span<const double> x) const {
  double inv2 = 1.0 / (2.0 * bandwidth * bandwidth);
  double out = 0.0;
  for (size_t k = 0; k < points.size(); ++k) {
    double d2 = 0.0;
    const auto& p = points[k];
    for (size_t d = 0; d < p.size(); ++d) {
      double diff = x[d] - p[d];
      d2 += diff * diff;
    }
    out += coef[k] * std::exp(-d2 * inv2);
  }
  return out;
}

namespace {

struct FeatureHash {
  size_t operator()(const std::vector<double>& v) const {
    // FNV over the raw bytes; features are built deterministically, so
    // bitwise equality is the right grouping.
    size_t h = 1469598103934665603ULL;
    const unsigned char* p = reinterpret_cast<const unsigned char*>(v.data());
    size_t n = v.size() * sizeof(double);
    for (size_t i = 0; i < n; ++i) h = (h ^ p[i]) * 1099511628211ULL;
    return h;
  }
};

// Grouped regression data for one (h, candidate): unique features with
// multiplicities and target moments.
struct Groups {
  int ns = 0;
  NextStateMode mode = NextStateMode::kSimplexHeads;
  std::vector<std::vector<double>> features;   // insertion order
  std::vector<double> count;
  std::vector<std::vector<double>> next_hist;  // simplex mode: counts per s'
  std::vector<double> next_sum, next_sumsq;    // scalar mode
  std::vector<double> reward_sum, reward_sumsq;
  double total = 0.0;
  std::unordered_map<std::vector<double>, int, FeatureHash> index;

  Groups(int num_states, NextStateMode m) : ns(num_states), mode(m) {}

  void add(std::vector<double> feature, int s_next_idx, double s_next_val, double r) {
    auto it = index.find(feature);
    int k;
    if (it == index.end()) {
      k = static_cast<int>(features.size());
      index.emplace(feature, k);
      features.push_back(std::move(feature));
      count.push_back(0.0);
      next_hist.emplace_back(ns, 0.0);
      next_sum.push_back(0.0);
      next_sumsq.push_back(0.0);
      reward_sum.push_back(0.0);
      reward_sumsq.push_back(0.0);
    } else {
      k = it->second;
    }
    count[k] += 1.0;
    next_hist[k][s_next_idx] += 1.0;
    next_sum[k] += s_next_val;
    next_sumsq[k] += s_next_val * s_next_val;
    reward_sum[k] += r;
    reward_sumsq[k] += r * r;
    total += 1.0;
  }
};

double median_pairwise_distance(const std::vector<std::vector<double>>& pts) {
  size_t m = pts.size();
  if (m < 2) return 1.0;
  // stride-sample large sets so the heuristic stays cheap and deterministic
  std::vector<size_t> idx;
  const size_t cap = 512;
  if (m <= cap) {
    idx.resize(m);
    for (size_t i = 0; i < m; ++i) idx[i] = i;
  } else {
    idx.resize(cap);
    for (size_t i = 0; i < cap; ++i) idx[i] = i * m / cap;
  }
  std::vector<double> dists;
  dists.reserve(idx.size() * (idx.size() - 1) / 2);
  for (size_t a = 0; a < idx.size(); ++a) {
    for (size_t b = a + 1; b < idx.size(); ++b) {
      const auto& x = pts[idx[a]];
      const auto& y = pts[idx[b]];
      double d2 = 0.0;
      for (size_t d = 0; d < x.size(); ++d) {
        double diff = x[d] - y[d];
        d2 += diff * diff;
      }
      dists.push_back(std::sqrt(d2));
    }
  }
  size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
  double med = dists[mid];
  return med > 1e-12 ? med : 1.0;
}

struct StepScore {
  StepFit fit;
  double loss = 0.0;
};

// Weighted Gaussian kernel ridge on the grouped data, all heads sharing one
// factorization; returns the fits and the exact empirical square loss.
StepScore fit_step(const Groups& g, double ridge, std::optional<double> bandwidth_override) {
  if (g.features.empty()) throw std::invalid_argument("no samples for step fit");
  int m = static_cast<int>(g.features.size());
  double bw = bandwidth_override ? *bandwidth_override : median_pairwise_distance(g.features);
  double inv2 = 1.0 / (2.0 * bw * bw);

  Eigen::MatrixXd kmat(m, m);
  for (int i = 0; i < m; ++i) {
    kmat(i, i) = 1.0;
    for (int j = i + 1; j < m; ++j) {
      double d2 = 0.0;
      const auto& x = g.features[i];
      const auto& y = g.features[j];
      for (size_t d = 0; d < x.size(); ++d) {
        double diff = x[d] - y[d];
        d2 += diff * diff;
      }
      kmat(i, j) = kmat(j, i) = std::exp(-d2 * inv2);
    }
  }
  Eigen::VectorXd sqw(m);
  for (int i = 0; i < m; ++i) sqw(i) = std::sqrt(g.count[i] / g.total);

  Eigen::MatrixXd a = sqw.asDiagonal() * kmat * sqw.asDiagonal();
  a.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("kernel ridge factorization failed");
  }

  int heads = (g.mode == NextStateMode::kSimplexHeads) ? g.ns : 1;
  Eigen::MatrixXd targets(m, heads + 1);
  for (int i = 0; i < m; ++i) {
    if (g.mode == NextStateMode::kSimplexHeads) {
      for (int s = 0; s < g.ns; ++s) targets(i, s) = g.next_hist[i][s] / g.count[i];
    } else {
      targets(i, 0) = g.next_sum[i] / g.count[i];
    }
    targets(i, heads) = g.reward_sum[i] / g.count[i];
  }
  Eigen::MatrixXd rhs = sqw.asDiagonal() * targets;
  Eigen::MatrixXd beta = llt.solve(rhs);
  Eigen::MatrixXd coef = sqw.asDiagonal() * beta;
  Eigen::MatrixXd pred = kmat * coef;

  StepScore out;
  out.fit.next_heads.resize(heads);
  auto fill_head = [&](RidgeHead& head, int col) {
    head.points = g.features;
    head.bandwidth = bw;
    head.coef.resize(m);
    for (int i = 0; i < m; ++i) head.coef[i] = coef(i, col);
  };
  for (int c = 0; c < heads; ++c) fill_head(out.fit.next_heads[c], c);
  fill_head(out.fit.reward_head, heads);

  // exact sum of squared residuals via per-group moments
  double loss = 0.0;
  for (int i = 0; i < m; ++i) {
    if (g.mode == NextStateMode::kSimplexHeads) {
      for (int s = 0; s < g.ns; ++s) {
        double p = pred(i, s);
        loss += g.count[i] * p * p - 2.0 * p * g.next_hist[i][s] + g.next_hist[i][s];
      }
    } else {
      double p = pred(i, 0);
      loss += g.count[i] * p * p - 2.0 * p * g.next_sum[i] + g.next_sumsq[i];
    }
    double q = pred(i, heads);
    loss += g.count[i] * q * q - 2.0 * q * g.reward_sum[i] + g.reward_sumsq[i];
  }
  out.loss = loss / g.total;
  return out;
}

// Per-agent pooled state histograms at step h (peer averages over episodes).
std::vector<std::vector<double>> pooled_state_hist(const Dataset& data,
                                                   const StateActionSpace& space, int h) {
  int n = data.num_agents();
  int L = data.num_episodes();
  std::vector<std::vector<double>> hist(n, std::vector<double>(space.num_states(), 0.0));
  double inv = 1.0 / L;
  for (int j = 0; j < n; ++j) {
    for (int tau = 0; tau < L; ++tau) {
      hist[j][space.state_index(data.at(tau, j, h).s)] += inv;
    }
  }
  return hist;
}

// z for every agent from peer histograms: (1/(N-1)) sum_{j != i} W(xi_i, xi_j) hist_j.
std::vector<std::vector<double>> weighted_aggregates(const Graphon& w,
                                                     std::span<const double> positions,
                                                     const std::vector<std::vector<double>>& hist,
                                                     int ns) {
  int n = static_cast<int>(positions.size());
  std::vector<std::vector<double>> z(n, std::vector<double>(ns, 0.0));
  double inv = 1.0 / (n - 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double wij = inv * w(positions[i], positions[j]);
      for (int s = 0; s < ns; ++s) z[i][s] += wij * hist[j][s];
    }
  }
  return z;
}

Groups build_groups(const Dataset& data, const StateActionSpace& space, int h,
                    const Graphon& w, std::span<const double> positions, const FitOptions& opts) {
  int n = data.num_agents();
  int L = data.num_episodes();
  int ns = space.num_states();
  Groups g(ns, opts.mode);
  if (opts.pooled) {
    auto hist = pooled_state_hist(data, space, h);
    auto z = weighted_aggregates(w, positions, hist, ns);
    for (int tau = 0; tau < L; ++tau) {
      for (int i = 0; i < n; ++i) {
        const StepRecord& rec = data.at(tau, i, h);
        g.add(make_feature(space.state_index(rec.s), rec.a, z[i], space),
              space.state_index(rec.s_next), rec.s_next, rec.r);
      }
    }
  } else {
    std::vector<int> states(n);
    for (int tau = 0; tau < L; ++tau) {
      for (int j = 0; j < n; ++j) states[j] = space.state_index(data.at(tau, j, h).s);
      for (int i = 0; i < n; ++i) {
        Aggregate z = empirical_aggregate(w, positions, states, i, ns);
        const StepRecord& rec = data.at(tau, i, h);
        g.add(make_feature(states[i], rec.a, z.mass, space), space.state_index(rec.s_next),
              rec.s_next, rec.r);
      }
    }
  }
  return g;
}

Groups build_groups_known_flow(const Dataset& data, const StateActionSpace& space, int h,
                               const Graphon& w, const DistributionFlow& ref_flow,
                               const FitOptions& opts) {
  int n = data.num_agents();
  int ns = space.num_states();
  Groups g(ns, opts.mode);
  std::vector<std::vector<double>> z(n);
  for (int i = 0; i < n; ++i) {
    z[i] = aggregate_at_position(w, ref_flow, data.scheme.positions[i], h).mass;
  }
  for (int tau = 0; tau < data.num_episodes(); ++tau) {
    for (int i = 0; i < n; ++i) {
      const StepRecord& rec = data.at(tau, i, h);
      g.add(make_feature(space.state_index(rec.s), rec.a, z[i], space),
            space.state_index(rec.s_next), rec.s_next, rec.r);
    }
  }
  return g;
}

std::vector<int> identity_perm(int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  return p;
}

void check_candidates(const CandidateSet& cands) {
  if (cands.graphons.empty()) throw std::invalid_argument("candidate set is empty");
  if (!(cands.ridge > 0.0)) throw std::invalid_argument("ridge parameter must be > 0");
}

int overall_argmin(const std::vector<double>& totals) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(totals.size()); ++c) {
    if (totals[c] < totals[best]) best = c;
  }
  return best;
}

}  // namespace

EstimatedModel fit(const Dataset& data, const StateActionSpace& space, const CandidateSet& cands,
                   const FitOptions& opts) {
  if (data.scheme.kind == SchemeKind::kUnknownGrid) {
    throw std::invalid_argument("fit requires known positions; use fit_unknown");
  }
  check_candidates(cands);
  if (opts.pooled && !data.single_policy()) {
    throw std::invalid_argument("pooled fit requires a single behavior policy");
  }
  int H = data.horizon;
  int C = static_cast<int>(cands.graphons.size());
  EstimatedModel out;
  out.mode = opts.mode;
  out.num_states = space.num_states();
  out.num_actions = space.num_actions();
  out.horizon = H;
  out.steps.resize(H);
  out.graphons.resize(H, cands.graphons[0]);
  out.selected_per_step.assign(H, 0);
  out.perm_per_step.assign(H, identity_perm(data.num_agents()));
  out.losses.assign(H, std::vector<double>(C, 0.0));
  out.total_losses.assign(C, 0.0);
  out.permutation = identity_perm(data.num_agents());
  for (int h = 0; h < H; ++h) {
    double best_loss = 0.0;
    for (int c = 0; c < C; ++c) {
      Groups g = build_groups(data, space, h, cands.graphons[c], data.scheme.positions, opts);
      StepScore score = fit_step(g, cands.ridge, cands.bandwidth);
      out.losses[h][c] = score.loss;
      out.total_losses[c] += score.loss;
      if (c == 0 || score.loss < best_loss) {
        best_loss = score.loss;
        out.steps[h] = std::move(score.fit);
        out.selected_per_step[h] = c;
        out.graphons[h] = cands.graphons[c];
      }
    }
  }
  out.selected_overall = overall_argmin(out.total_losses);
  return out;
}

EstimatedModel fit_known_flow(const Dataset& data, const StateActionSpace& space,
                              const DistributionFlow& ref_flow, const CandidateSet& cands,
                              const FitOptions& opts) {
  if (data.scheme.kind == SchemeKind::kUnknownGrid) {
    throw std::invalid_argument("fit_known_flow requires known positions");
  }
  check_candidates(cands);
  int H = data.horizon;
  int C = static_cast<int>(cands.graphons.size());
  EstimatedModel out;
  out.mode = opts.mode;
  out.num_states = space.num_states();
  out.num_actions = space.num_actions();
  out.horizon = H;
  out.steps.resize(H);
  out.graphons.resize(H, cands.graphons[0]);
  out.selected_per_step.assign(H, 0);
  out.perm_per_step.assign(H, identity_perm(data.num_agents()));
  out.losses.assign(H, std::vector<double>(C, 0.0));
  out.total_losses.assign(C, 0.0);
  out.permutation = identity_perm(data.num_agents());
  for (int h = 0; h < H; ++h) {
    double best_loss = 0.0;
    for (int c = 0; c < C; ++c) {
      Groups g = build_groups_known_flow(data, space, h, cands.graphons[c], ref_flow, opts);
      StepScore score = fit_step(g, cands.ridge, cands.bandwidth);
      out.losses[h][c] = score.loss;
      out.total_losses[c] += score.loss;
      if (c == 0 || score.loss < best_loss) {
        best_loss = score.loss;
        out.steps[h] = std::move(score.fit);
        out.selected_per_step[h] = c;
        out.graphons[h] = cands.graphons[c];
      }
    }
  }
  out.selected_overall = overall_argmin(out.total_losses);
  return out;
}

std::vector<std::vector<int>> all_permutations(int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

EstimatedModel fit_unknown(const Dataset& data, const StateActionSpace& space,
                           const CandidateSet& cands, const FitOptions& opts) {
  if (data.scheme.kind != SchemeKind::kUnknownGrid) {
    throw std::invalid_argument("fit_unknown requires the unknown-grid scheme");
  }
  check_candidates(cands);
  int n = data.num_agents();
  if (n > 8) {
    throw std::invalid_argument(
        "unknown-position search is exhaustive over N! assignments and refuses N > 8 (N = " +
        std::to_string(n) + ")");
  }
  if (!data.single_policy()) {
    throw std::invalid_argument("unknown-position fit requires a single behavior policy");
  }
  FitOptions pooled_opts = opts;
  pooled_opts.pooled = true;  // the estimator averages peer states over episodes

  int H = data.horizon;
  int C = static_cast<int>(cands.graphons.size());
  auto perms = all_permutations(n);
  int P = static_cast<int>(perms.size());

  EstimatedModel out;
  out.mode = opts.mode;
  out.num_states = space.num_states();
  out.num_actions = space.num_actions();
  out.horizon = H;
  out.steps.resize(H);
  out.graphons.resize(H, cands.graphons[0]);
  out.selected_per_step.assign(H, 0);
  out.perm_per_step.assign(H, perms[0]);
  out.losses.assign(H, std::vector<double>(C, std::numeric_limits<double>::infinity()));
  out.perm_total_losses.assign(P, std::vector<double>(C, 0.0));

  std::vector<double> best_step_loss(H, 0.0);
  std::vector<bool> step_has_best(H, false);
  std::vector<double> positions(n);
  for (int p = 0; p < P; ++p) {
    for (int i = 0; i < n; ++i) positions[i] = static_cast<double>(perms[p][i] + 1) / n;
    for (int h = 0; h < H; ++h) {
      for (int c = 0; c < C; ++c) {
        Groups g = build_groups(data, space, h, cands.graphons[c], positions, pooled_opts);
        StepScore score = fit_step(g, cands.ridge, cands.bandwidth);
        out.perm_total_losses[p][c] += score.loss;
        out.losses[h][c] = std::min(out.losses[h][c], score.loss);
        if (!step_has_best[h] || score.loss < best_step_loss[h]) {
          step_has_best[h] = true;
          best_step_loss[h] = score.loss;
          out.steps[h] = std::move(score.fit);
          out.selected_per_step[h] = c;
          out.perm_per_step[h] = perms[p];
          out.graphons[h] = cands.graphons[c].permuted(perms[p]);
        }
      }
    }
  }
  int best_p = 0, best_c = 0;
  double best_total = out.perm_total_losses[0][0];
  for (int p = 0; p < P; ++p) {
    for (int c = 0; c < C; ++c) {
      if (out.perm_total_losses[p][c] < best_total) {
        best_total = out.perm_total_losses[p][c];
        best_p = p;
        best_c = c;
      }
    }
  }
  out.permutation = perms[best_p];
  out.selected_overall = best_c;
  out.total_losses.assign(C, 0.0);
  for (int c = 0; c < C; ++c) {
    double t = 0.0;
    for (int p = 0; p < P; ++p) t = (p == 0) ? out.perm_total_losses[p][c]
                                             : std::min(t, out.perm_total_losses[p][c]);
    out.total_losses[c] = t;
  }
  return out;
}

GmfgModel EstimatedModel::to_gmfg_model(const StateActionSpace& space,
                                        std::vector<double> mu1) const {
  if (mode != NextStateMode::kSimplexHeads) {
    throw std::invalid_argument("only simplex-head fits define a transition kernel");
  }
  auto shared = std::make_shared<const EstimatedModel>(*this);
  GmfgModel m;
  m.space = space;
  m.horizon = horizon;
  m.initial = std::move(mu1);
  m.graphons = graphons;
  StateActionSpace sp = space;
  m.transition = [shared, sp](int h, int s, int a, const Aggregate& z, std::span<double> out) {
    auto x = make_feature(s, a, z.mass, sp);
    const StepFit& step = shared->steps[h];
    double sum = 0.0;
    for (size_t head = 0; head < step.next_heads.size(); ++head) {
      double v = step.next_heads[head].predict(x);
      out[head] = v > 0.0 ? v : 0.0;  // clip-to-zero simplex projection
      sum += out[head];
    }
    if (sum <= 1e-12) {
      double u = 1.0 / static_cast<double>(step.next_heads.size());
      for (size_t head = 0; head < step.next_heads.size(); ++head) out[head] = u;
    } else {
      for (size_t head = 0; head < step.next_heads.size(); ++head) out[head] /= sum;
    }
  };
  m.reward = [shared, sp](int h, int s, int a, const Aggregate& z) {
    auto x = make_feature(s, a, z.mass, sp);
    return shared->steps[h].reward_head.predict(x);
  };
  return m;
}

namespace {

json head_to_json(const RidgeHead& head) {
  return json{{"points", head.points}, {"coef", head.coef}, {"bandwidth", head.bandwidth}};
}

RidgeHead head_from_json(const json& j) {
  RidgeHead head;
  head.points = j.at("points").get<std::vector<std::vector<double>>>();
  head.coef = j.at("coef").get<std::vector<double>>();
  head.bandwidth = j.at("bandwidth").get<double>();
  return head;
}

}  // namespace

std::string estimated_model_to_json(const EstimatedModel& model) {
  json j;
  j["mode"] = model.mode == NextStateMode::kSimplexHeads ? "simplex" : "scalar";
  j["num_states"] = model.num_states;
  j["num_actions"] = model.num_actions;
  j["horizon"] = model.horizon;
  json steps = json::array();
  for (const StepFit& s : model.steps) {
    json heads = json::array();
    for (const RidgeHead& head : s.next_heads) heads.push_back(head_to_json(head));
    steps.push_back({{"next", std::move(heads)}, {"reward", head_to_json(s.reward_head)}});
  }
  j["steps"] = std::move(steps);
  json gr = json::array();
  for (const Graphon& g : model.graphons) gr.push_back(graphon_to_json(g));
  j["graphons"] = std::move(gr);
  j["selected_per_step"] = model.selected_per_step;
  j["perm_per_step"] = model.perm_per_step;
  j["selected_overall"] = model.selected_overall;
  j["permutation"] = model.permutation;
  j["losses"] = model.losses;
  j["total_losses"] = model.total_losses;
  return j.dump(2);
}

EstimatedModel estimated_model_from_json(const std::string& text) {
  json j = json::parse(text);
  EstimatedModel m;
  m.mode = j.at("mode").get<std::string>() == "simplex" ? NextStateMode::kSimplexHeads
                                                        : NextStateMode::kScalar;
  m.num_states = j.at("num_states").get<int>();
  m.num_actions = j.at("num_actions").get<int>();
  m.horizon = j.at("horizon").get<int>();
  for (const auto& js : j.at("steps")) {
    StepFit s;
    for (const auto& jh : js.at("next")) s.next_heads.push_back(head_from_json(jh));
    s.reward_head = head_from_json(js.at("reward"));
    m.steps.push_back(std::move(s));
  }
  for (const auto& jg : j.at("graphons")) m.graphons.push_back(graphon_from_json(jg));
  m.selected_per_step = j.at("selected_per_step").get<std::vector<int>>();
  m.perm_per_step = j.at("perm_per_step").get<std::vector<std::vector<int>>>();
  m.selected_overall = j.at("selected_overall").get<int>();
  m.permutation = j.at("permutation").get<std::vector<int>>();
  m.losses = j.at("losses").get<std::vector<std::vector<double>>>();
  m.total_losses = j.at("total_losses").get<std::vector<double>>();
  return m;
}

StepPredictor predictor_from_model(const EstimatedModel& model, int h) {
  auto shared = std::make_shared<const EstimatedModel>(model);
  StepPredictor p;
  p.mode = model.mode;
  p.next = [shared, h](std::span<const double> x, std::span<double> out) {
    const StepFit& step = shared->steps[h];
    for (size_t head = 0; head < step.next_heads.size(); ++head) {
      out[head] = step.next_heads[head].predict(x);
    }
  };
  p.reward = [shared, h](std::span<const double> x) { return shared->steps[h].reward_head.predict(x); };
  return p;
}

namespace {

// Recover (s, a, z) from a feature: the query block is the only one that can
// carry mass. Degenerate all-zero features decode to block 0 with z = 0.
struct DecodedFeature {
  int s = 0, a = 0;
  std::vector<double> z;
};

DecodedFeature decode_feature(std::span<const double> x, int ns, int na) {
  DecodedFeature d;
  d.z.assign(ns, 0.0);
  int best_block = 0;
  double best_mass = -1.0;
  for (int b = 0; b < ns * na; ++b) {
    double mass = 0.0;
    for (int sp = 0; sp < ns; ++sp) mass += std::abs(x[static_cast<size_t>(b) * ns + sp]);
    if (mass > best_mass) {
      best_mass = mass;
      best_block = b;
    }
  }
  d.s = best_block / na;
  d.a = best_block % na;
  for (int sp = 0; sp < ns; ++sp) d.z[sp] = x[static_cast<size_t>(best_block) * ns + sp];
  return d;
}

}  // namespace

StepPredictor truth_predictor(const GmfgModel& model, int h, NextStateMode mode) {
  auto shared = std::make_shared<const GmfgModel>(model);
  int ns = model.space.num_states();
  int na = model.space.num_actions();
  StepPredictor p;
  p.mode = mode;
  p.next = [shared, h, ns, na, mode](std::span<const double> x, std::span<double> out) {
    DecodedFeature d = decode_feature(x, ns, na);
    Aggregate z{d.z};
    std::vector<double> probs(ns);
    shared->transition(h, d.s, d.a, z, probs);
    if (mode == NextStateMode::kSimplexHeads) {
      for (int s = 0; s < ns; ++s) out[s] = probs[s];
    } else {
      double mean = 0.0;
      for (int s = 0; s < ns; ++s) mean += probs[s] * shared->space.states[s];
      out[0] = mean;
    }
  };
  p.reward = [shared, h, ns, na](std::span<const double> x) {
    DecodedFeature d = decode_feature(x, ns, na);
    Aggregate z{d.z};
    return shared->reward(h, d.s, d.a, z);
  };
  return p;
}

namespace {

// E[(target - pred)^2] for one (position, s, a) under the true next-state law.
double point_risk(const StepPredictor& pred, const GmfgModel& truth, int h, int s, int a,
                  const Aggregate& z_true, std::span<const double> feature) {
  int ns = truth.space.num_states();
  std::vector<double> probs(ns);
  truth.transition(h, s, a, z_true, probs);
  double risk = 0.0;
  if (pred.mode == NextStateMode::kSimplexHeads) {
    std::vector<double> f(ns);
    pred.next(feature, f);
    for (int head = 0; head < ns; ++head) {
      // sum_{s'} P(s') (1[s'=head] - f)^2 = f^2 - 2 f P(head) + P(head)
      risk += f[head] * f[head] - 2.0 * f[head] * probs[head] + probs[head];
    }
  } else {
    double f;
    pred.next(feature, {&f, 1});
    for (int sp = 0; sp < ns; ++sp) {
      double diff = truth.space.states[sp] - f;
      risk += probs[sp] * diff * diff;
    }
  }
  double g = pred.reward(feature);
  double diff = truth.reward(h, s, a, z_true) - g;
  return risk + diff * diff;
}

double position_integrand(const StepPredictor& pred, const Graphon& w, const GmfgModel& truth,
                          const PolicyProfile& behavior, const DistributionFlow& flow, double pos,
                          int h) {
  AgentGrid grid{flow.cells()};
  int cell = grid.cell_of(pos);
  Aggregate z_true = aggregate_at_position(truth.graphons[h], flow, pos, h);
  Aggregate z_cand = aggregate_at_position(w, flow, pos, h);
  int ns = truth.space.num_states();
  int na = truth.space.num_actions();
  double total = 0.0;
  for (int s = 0; s < ns; ++s) {
    double ps = flow.at(cell, h, s);
    if (ps == 0.0) continue;
    auto feature = make_feature(s, 0, z_cand.mass, truth.space);
    size_t block = static_cast<size_t>(s) * na * ns;
    for (int a = 0; a < na; ++a) {
      double pa = behavior.at(cell, h, s, a);
      if (pa == 0.0) continue;
      // move the aggregate to the (s, a) block
      std::fill(feature.begin(), feature.end(), 0.0);
      for (int sp = 0; sp < ns; ++sp) feature[block + static_cast<size_t>(a) * ns + sp] = z_cand.mass[sp];
      total += ps * pa * point_risk(pred, truth, h, s, a, z_true, feature);
    }
  }
  return total;
}

}  // namespace

double risk_conditional(const StepPredictor& pred, const Graphon& w, const GmfgModel& truth,
                        std::span<const PolicyProfile> behaviors, const PositionScheme& scheme,
                        int h) {
  if (behaviors.empty()) throw std::invalid_argument("risk needs at least one behavior policy");
  double total = 0.0;
  for (const PolicyProfile& b : behaviors) {
    DistributionFlow flow = gamma2(b, truth);
    for (double pos : scheme.positions) {
      total += position_integrand(pred, w, truth, b, flow, pos, h);
    }
  }
  return total / (static_cast<double>(behaviors.size()) * scheme.num_agents());
}

double risk_population(const StepPredictor& pred, const Graphon& w, const GmfgModel& truth,
                       std::span<const PolicyProfile> behaviors, int grid_cells, int h) {
  if (behaviors.empty()) throw std::invalid_argument("risk needs at least one behavior policy");
  AgentGrid grid{grid_cells};
  double total = 0.0;
  for (const PolicyProfile& b : behaviors) {
    DistributionFlow flow = gamma2(b, truth);
    for (int i = 0; i < grid_cells; ++i) {
      total += position_integrand(pred, w, truth, b, flow, grid.position(i), h);
    }
  }
  return total / (static_cast<double>(behaviors.size()) * grid_cells);
}

double risk_perm_invariant(const StepPredictor& pred, const Graphon& w, const GmfgModel& truth,
                           std::span<const PolicyProfile> behaviors, const PositionScheme& scheme,
                           int h) {
  int n = scheme.num_agents();
  if (n > 8) throw std::invalid_argument("permutation-invariant risk refuses N > 8 (N! search)");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& perm : all_permutations(n)) {
    best = std::min(best, risk_conditional(pred, w.permuted(perm), truth, behaviors, scheme, h));
  }
  return best;
}

double model_risk_conditional(const EstimatedModel& model, const GmfgModel& truth,
                              std::span<const PolicyProfile> behaviors,
                              const PositionScheme& scheme) {
  double total = 0.0;
  for (int h = 0; h < model.horizon; ++h) {
    total += risk_conditional(predictor_from_model(model, h), model.graphons[h], truth, behaviors,
                              scheme, h);
  }
  return total / model.horizon;
}

}  // namespace gmfg
