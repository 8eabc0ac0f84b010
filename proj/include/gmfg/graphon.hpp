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
#include <string>
#include <vector>

namespace gmfg {

/// Symmetric interaction kernel W: [0,1]^2 -> [0,1].
///
/// Families:
///   Constant(p)                        W == p
///   Exp(theta)                         W = 2 exp(theta a b) / (1 + exp(theta a b)) - 1
///   Block(boundaries, values)          piecewise constant on given cells
///   Step(values)                       piecewise constant on uniform cells
///
/// A graphon can additionally carry a block permutation (a measure-preserving
/// bijection that permutes the uniform intervals ((k)/P, (k+1)/P]), giving
/// W^phi(x, y) = W(phi(x), phi(y)).
class Graphon {
 public:
  enum class Family { kConstant, kExp, kBlock, kStep };

  Graphon() : family_(Family::kConstant), p_(0.0) {}

  static Graphon constant(double p);
  static Graphon exp_family(double theta);
  // boundaries are the interior right endpoints; cell k is (b_{k-1}, b_k].
  static Graphon block(std::vector<double> boundaries, std::vector<std::vector<double>> values);
  static Graphon step(std::vector<std::vector<double>> values);
  // Two-parameter stochastic block model on `communities` uniform blocks.
  static Graphon sbm(int communities, double intra, double inter);

  double operator()(double alpha, double beta) const;

  /// W^phi for the block bijection mapping interval k to interval perm[k].
  /// Composes with an existing permutation of the same block count.
  Graphon permuted(const std::vector<int>& cell_perm) const;

  Family family() const { return family_; }
  double constant_value() const { return p_; }
  double theta() const { return p_; }
  const std::vector<std::vector<double>>& values() const { return values_; }
  const std::vector<double>& boundaries() const { return boundaries_; }
  const std::vector<int>& permutation() const { return perm_; }

  std::string describe() const;

 private:
  double base_value(double alpha, double beta) const;
  double apply_perm(double x) const;

  Family family_;
  double p_ = 0.0;                            // constant value or exp theta
  std::vector<double> boundaries_;            // block family: interior boundaries
  std::vector<std::vector<double>> values_;   // block/step family
  std::vector<int> perm_;                     // empty = identity
};

void check_block_bijection(const std::vector<int>& perm);

}  // namespace gmfg
