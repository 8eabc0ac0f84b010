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

#include "gmfg/graphon.hpp"

#include <cmath>
#include <stdexcept>

namespace gmfg {

namespace {

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
  }
}

void check_symmetric_values(const std::vector<std::vector<double>>& values) {
  size_t n = values.size();
  if (n == 0) throw std::invalid_argument("block value matrix must be nonempty");
  for (size_t i = 0; i < n; ++i) {
    if (values[i].size() != n) throw std::invalid_argument("block value matrix must be square");
    for (size_t j = 0; j < n; ++j) {
      check_unit(values[i][j], "graphon value");
      if (values[i][j] != values[j][i]) {
        throw std::invalid_argument("block value matrix must be symmetric");
      }
    }
  }
}

}  // namespace

void check_block_bijection(const std::vector<int>& perm) {
  std::vector<bool> seen(perm.size(), false);
  for (int v : perm) {
    if (v < 0 || v >= static_cast<int>(perm.size()) || seen[v]) {
      throw std::invalid_argument("cell permutation is not a bijection");
    }
    seen[v] = true;
  }
}

Graphon Graphon::constant(double p) {
  check_unit(p, "constant graphon value");
  Graphon g;
  g.family_ = Family::kConstant;
  g.p_ = p;
  return g;
}

Graphon Graphon::exp_family(double theta) {
  if (theta <= 0.0) throw std::invalid_argument("exp graphon requires theta > 0");
  Graphon g;
  g.family_ = Family::kExp;
  g.p_ = theta;
  return g;
}

Graphon Graphon::block(std::vector<double> boundaries, std::vector<std::vector<double>> values) {
  check_symmetric_values(values);
  if (boundaries.size() + 1 != values.size()) {
    throw std::invalid_argument("block graphon needs one boundary fewer than blocks");
  }
  double prev = 0.0;
  for (double b : boundaries) {
    if (!(b > prev && b < 1.0)) throw std::invalid_argument("block boundaries must increase in (0,1)");
    prev = b;
  }
  Graphon g;
  g.family_ = Family::kBlock;
  g.boundaries_ = std::move(boundaries);
  g.values_ = std::move(values);
  return g;
}

Graphon Graphon::step(std::vector<std::vector<double>> values) {
  check_symmetric_values(values);
  Graphon g;
  g.family_ = Family::kStep;
  g.values_ = std::move(values);
  return g;
}

Graphon Graphon::sbm(int communities, double intra, double inter) {
  if (communities < 1) throw std::invalid_argument("sbm needs at least one community");
  check_unit(intra, "sbm intra value");
  check_unit(inter, "sbm inter value");
  std::vector<std::vector<double>> values(communities, std::vector<double>(communities, inter));
  for (int k = 0; k < communities; ++k) values[k][k] = intra;
  return step(std::move(values));
}

double Graphon::apply_perm(double x) const {
  if (perm_.empty()) return x;
  int blocks = static_cast<int>(perm_.size());
  int k = static_cast<int>(std::ceil(x * blocks)) - 1;
  if (k < 0) k = 0;
  if (k >= blocks) k = blocks - 1;
  return x + static_cast<double>(perm_[k] - k) / blocks;
}

double Graphon::base_value(double alpha, double beta) const {
  switch (family_) {
    case Family::kConstant:
      return p_;
    case Family::kExp: {
      // 2 e^x / (1 + e^x) - 1 == tanh(x / 2); group alpha*beta so the
      // symmetry W(a,b) == W(b,a) holds bit-exactly
      return std::tanh(0.5 * (p_ * (alpha * beta)));
    }
    case Family::kBlock: {
      auto cell = [&](double x) {
        size_t k = 0;
        while (k < boundaries_.size() && x > boundaries_[k]) ++k;
        return k;
      };
      return values_[cell(alpha)][cell(beta)];
    }
    case Family::kStep: {
      int blocks = static_cast<int>(values_.size());
      auto cell = [&](double x) {
        int k = static_cast<int>(std::ceil(x * blocks)) - 1;
        if (k < 0) k = 0;
        if (k >= blocks) k = blocks - 1;
        return k;
      };
      return values_[cell(alpha)][cell(beta)];
    }
  }
  return 0.0;
}

double Graphon::operator()(double alpha, double beta) const {
  return base_value(apply_perm(alpha), apply_perm(beta));
}

Graphon Graphon::permuted(const std::vector<int>& cell_perm) const {
  check_block_bijection(cell_perm);
  Graphon g = *this;
  if (perm_.empty()) {
    g.perm_ = cell_perm;
  } else {
    if (perm_.size() != cell_perm.size()) {
      throw std::invalid_argument("cannot compose block permutations with different block counts");
    }
    // (W^{phi0})^{phi1}(x,y) = W(phi0(phi1(x)), phi0(phi1(y)))
    std::vector<int> composed(cell_perm.size());
    for (size_t k = 0; k < cell_perm.size(); ++k) composed[k] = perm_[cell_perm[k]];
    g.perm_ = std::move(composed);
  }
  bool identity = true;
  for (size_t k = 0; k < g.perm_.size(); ++k) {
    if (g.perm_[k] != static_cast<int>(k)) { identity = false; break; }
  }
  if (identity) g.perm_.clear();
  return g;
}

std::string Graphon::describe() const {
  std::string s;
  switch (family_) {
    case Family::kConstant: s = "constant(" + std::to_string(p_) + ")"; break;
    case Family::kExp: s = "exp(" + std::to_string(p_) + ")"; break;
    case Family::kBlock: s = "block(" + std::to_string(values_.size()) + ")"; break;
    case Family::kStep: s = "step(" + std::to_string(values_.size()) + ")"; break;
  }
  if (!perm_.empty()) s += "^perm";
  return s;
}

}  // namespace gmfg
