// Copyright 2026 The qlml Authors
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

// Test-only oracles. Everything here recomputes quantities through the dense
// joint-matrix route (build the full operator over X (x) V (x) W, then use
// generic eigenvalue machinery), independent of the block-level code paths
// under test.

#pragma once

#include <Eigen/Dense>

#include "qlml/hybrid_state.hpp"
#include "qlml/rng.hpp"

namespace qlml::testing {

// Dense embedding with index ((x * 2^q) + v_row) * 2^m + w on both sides.
inline Matrix dense_embed(const HybridState& s) {
  const Eigen::Index dim =
      static_cast<Eigen::Index>(s.num_x()) * s.dim_v() * s.num_w();
  Matrix full = Matrix::Zero(dim, dim);
  for (int x = 0; x < s.num_x(); ++x)
    for (int w = 0; w < s.num_w(); ++w) {
      const Matrix& b = s.block(x, w);
      for (int i = 0; i < s.dim_v(); ++i)
        for (int j = 0; j < s.dim_v(); ++j) {
          Eigen::Index r = (static_cast<Eigen::Index>(x) * s.dim_v() + i) *
                               s.num_w() + w;
          Eigen::Index c = (static_cast<Eigen::Index>(x) * s.dim_v() + j) *
                               s.num_w() + w;
          full(r, c) = b(i, j);
        }
    }
  return full;
}

inline double dense_nuclear_norm(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

// Partial trace of the dense embedding down to V, brute force.
inline Matrix dense_marginal_v(const HybridState& s) {
  Matrix acc = Matrix::Zero(s.dim_v(), s.dim_v());
  Matrix full = dense_embed(s);
  for (int i = 0; i < s.dim_v(); ++i)
    for (int j = 0; j < s.dim_v(); ++j)
      for (int x = 0; x < s.num_x(); ++x)
        for (int w = 0; w < s.num_w(); ++w) {
          Eigen::Index r = (static_cast<Eigen::Index>(x) * s.dim_v() + i) *
                               s.num_w() + w;
          Eigen::Index c = (static_cast<Eigen::Index>(x) * s.dim_v() + j) *
                               s.num_w() + w;
          acc(i, j) += full(r, c);
        }
  return acc;
}

// Random normalized state: random PSD blocks with Dirichlet-ish weights.
inline HybridState random_state(int n, int m, int q, RngStream& rng) {
  HybridState s(n, m, q);
  double total = 0.0;
  std::vector<double> weights(static_cast<std::size_t>(s.num_x()) * s.num_w());
  for (auto& w : weights) {
    w = -std::log(1.0 - rng.uniform() + 1e-300);
    total += w;
  }
  std::size_t i = 0;
  for (int x = 0; x < s.num_x(); ++x)
    for (int w = 0; w < s.num_w(); ++w) {
      Matrix rho = rng.random_density(s.dim_v());
      s.set_block(x, w, (weights[i++] / total) * rho);
    }
  return s;
}

// Random subnormalized state (total trace weight u in [0,1]).
inline HybridState random_partial_state(int n, int m, int q, RngStream& rng) {
  HybridState s = random_state(n, m, q, rng);
  double u = rng.uniform();
  for (int x = 0; x < s.num_x(); ++x)
    for (int w = 0; w < s.num_w(); ++w) s.set_block(x, w, u * s.block(x, w));
  return s;
}

}  // namespace qlml::testing
