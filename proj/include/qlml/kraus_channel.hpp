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

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qlml/hybrid_state.hpp"
#include "qlml/rng.hpp"

namespace qlml {

// A memory-update channel on V (x) W, controlled by the classical input w:
// for each input w a Kraus family of maps from V (dim 2^q) into V (x) W
// (dim 2^q 2^m, w-major sectors). Completeness Sum_k E*E = I holds per input
// w; validity additionally requires that outputs never carry cross-w
// coherences, so W stays classical.
class KrausChannel {
 public:
  KrausChannel(int q, int m) : q_(q), m_(m), ops_(std::size_t(1) << m) {}

  int q() const { return q_; }
  int m() const { return m_; }
  int dim_v() const { return 1 << q_; }
  int num_w() const { return 1 << m_; }
  int dim_out() const { return dim_v() * num_w(); }

  void add_op(int w_in, Matrix e) {
    if (e.rows() != dim_out() || e.cols() != dim_v())
      throw ShapeError("KrausChannel: operator must be (2^q 2^m) x 2^q");
    ops_[w_in].push_back(std::move(e));
  }

  // Convenience: an operator supported on a single output sector w_out.
  void add_sector_op(int w_in, int w_out, const Matrix& g) {
    Matrix e = Matrix::Zero(dim_out(), dim_v());
    e.block(static_cast<Eigen::Index>(w_out) * dim_v(), 0, dim_v(), dim_v()) =
        g;
    add_op(w_in, std::move(e));
  }

  const std::vector<Matrix>& ops(int w_in) const { return ops_[w_in]; }

  bool validated() const { return validated_; }
  void mark_validated() const { validated_ = true; }

  // Applies the channel to a V-block entering at classical memory w_in and
  // returns the output blocks per output memory label. Assumes the channel
  // has been validated; cross-sector output terms are not materialized.
  std::vector<Matrix> apply(const Matrix& rho, int w_in) const {
    std::vector<Matrix> out(num_w(), Matrix::Zero(dim_v(), dim_v()));
    const int dv = dim_v();
    for (const Matrix& e : ops_[w_in]) {
      for (int wo = 0; wo < num_w(); ++wo) {
        auto blk = e.block(static_cast<Eigen::Index>(wo) * dv, 0, dv, dv);
        if (blk.cwiseAbs().maxCoeff() == 0.0) continue;
        out[wo] += blk * rho * blk.adjoint();
      }
    }
    return out;
  }

 private:
  int q_, m_;
  std::vector<std::vector<Matrix>> ops_;  // per input w
  mutable bool validated_ = false;
};

struct ChannelViolation {
  std::string what;
  int w_in = -1;
  int k = -1;
  double magnitude = 0.0;
};

// Checks completeness per input w and output classicality: the channel is
// applied to a basis of test inputs (matrix units on V) and any cross-w
// output coherence above tol is reported.
inline std::optional<ChannelViolation> validate_channel(const KrausChannel& c,
                                                        double tol
                                                        = kDefaultTol) {
  const int dv = c.dim_v();
  for (int w = 0; w < c.num_w(); ++w) {
    Matrix sum = Matrix::Zero(dv, dv);
    for (const Matrix& e : c.ops(w)) sum += e.adjoint() * e;
    double dev = (sum - Matrix::Identity(dv, dv)).cwiseAbs().maxCoeff();
    if (dev > tol)
      return ChannelViolation{"completeness", w, -1, dev};
  }
  for (int w = 0; w < c.num_w(); ++w) {
    for (int i = 0; i < dv; ++i) {
      for (int j = 0; j < dv; ++j) {
        Matrix unit = Matrix::Zero(dv, dv);
        unit(i, j) = 1.0;
        Matrix out = Matrix::Zero(c.dim_out(), c.dim_out());
        for (const Matrix& e : c.ops(w)) out += e * unit * e.adjoint();
        for (int w1 = 0; w1 < c.num_w(); ++w1)
          for (int w2 = 0; w2 < c.num_w(); ++w2) {
            if (w1 == w2) continue;
            double mag = out.block(static_cast<Eigen::Index>(w1) * dv,
                                   static_cast<Eigen::Index>(w2) * dv, dv, dv)
                             .cwiseAbs()
                             .maxCoeff();
            if (mag > tol)
              return ChannelViolation{"cross-w coherence", w, -1, mag};
          }
      }
    }
  }
  return std::nullopt;
}

inline KrausChannel identity_channel(int q, int m) {
  KrausChannel c(q, m);
  for (int w = 0; w < c.num_w(); ++w)
    c.add_sector_op(w, w, Matrix::Identity(c.dim_v(), c.dim_v()));
  return c;
}

// Deterministic classical update w -> next_w[w]; identity on V.
inline KrausChannel classical_table_channel(int q, int m,
                                            const std::vector<int>& next_w) {
  KrausChannel c(q, m);
  if (static_cast<int>(next_w.size()) != c.num_w())
    throw ShapeError("classical_table_channel: table size mismatch");
  for (int w = 0; w < c.num_w(); ++w) {
    if (next_w[w] < 0 || next_w[w] >= c.num_w())
      throw std::invalid_argument("classical_table_channel: target out of range");
    c.add_sector_op(w, next_w[w], Matrix::Identity(c.dim_v(), c.dim_v()));
  }
  return c;
}

// Unitary on V, classical update on W.
inline KrausChannel unitary_channel(int q, int m, const Matrix& u,
                                    const std::vector<int>& next_w) {
  KrausChannel c(q, m);
  for (int w = 0; w < c.num_w(); ++w)
    c.add_sector_op(w, next_w.empty() ? w : next_w[w], u);
  return c;
}

// Measures V in the computational basis, writes a fresh state per outcome and
// optionally records the outcome into W via (w, outcome) -> w'.
inline KrausChannel measure_prepare_channel(
    int q, int m, const std::vector<Vector>& prep,
    const std::vector<std::vector<int>>& w_update) {
  KrausChannel c(q, m);
  const int dv = c.dim_v();
  for (int w = 0; w < c.num_w(); ++w)
    for (int i = 0; i < dv; ++i) {
      Matrix g = prep[i % prep.size()] * Vector::Unit(dv, i).adjoint();
      int wt = w_update.empty() ? w : w_update[w][i];
      c.add_sector_op(w, wt, g);
    }
  return c;
}

// Random valid channel: per input w, a whitened family of Gaussian Kraus
// operators each supported on a random output sector. Classicality holds by
// construction; completeness is enforced exactly by the whitening.
inline KrausChannel random_hybrid_channel(int q, int m, int ops_per_w,
                                          RngStream& rng) {
  KrausChannel c(q, m);
  const int dv = c.dim_v();
  for (int w = 0; w < c.num_w(); ++w) {
    std::vector<Matrix> gs;
    std::vector<int> sectors;
    Matrix s = Matrix::Zero(dv, dv);
    for (int k = 0; k < ops_per_w; ++k) {
      Matrix g = rng.gaussian_matrix(dv, dv);
      sectors.push_back(rng.uniform_int(0, c.num_w() - 1));
      s += g.adjoint() * g;
      gs.push_back(std::move(g));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    Matrix s_inv_sqrt = es.eigenvectors() *
                        es.eigenvalues().cwiseMax(1e-300).cwiseInverse()
                            .cwiseSqrt().asDiagonal() *
                        es.eigenvectors().adjoint();
    for (int k = 0; k < ops_per_w; ++k)
      c.add_sector_op(w, sectors[k], gs[k] * s_inv_sqrt);
  }
  return c;
}

}  // namespace qlml
