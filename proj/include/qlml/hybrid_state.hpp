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
#include <vector>

#include "qlml/distribution.hpp"
#include "qlml/linalg.hpp"

namespace qlml {

// A joint partial system over a classical concept register X (n bits), a
// quantum memory V (q qubits) and a classical memory W (m bits). Classicality
// of X and W means the operator is a direct sum of per-(x,w) blocks on V;
// no cross-(x,w) coherences are representable, by construction.
//
// Blocks are stored behind shared pointers: copies of a state are cheap and
// share every block that is not subsequently replaced. Values are treated as
// immutable after construction; all operations below are pure.
class HybridState {
 public:
  HybridState(int n, int m, int q, double tol = kDefaultTol)
      : n_(n), m_(m), q_(q), tol_(tol) {
    zero_ = std::make_shared<const Matrix>(Matrix::Zero(dim_v(), dim_v()));
    blocks_.assign(static_cast<std::size_t>(num_x()) * num_w(), zero_);
  }

  // The fully mixed initial system: every block (1/2^n)(1/2^m)(1/2^q) I.
  static HybridState maximally_mixed(int n, int m, int q,
                                     double tol = kDefaultTol) {
    HybridState s(n, m, q, tol);
    double c = std::ldexp(1.0, -(n + m + q));
    auto blk = std::make_shared<const Matrix>(
        c * Matrix::Identity(s.dim_v(), s.dim_v()));
    for (auto& b : s.blocks_) b = blk;
    return s;
  }

  int n() const { return n_; }
  int m() const { return m_; }
  int q() const { return q_; }
  int num_x() const { return 1 << n_; }
  int num_w() const { return 1 << m_; }
  int dim_v() const { return 1 << q_; }
  double tol() const { return tol_; }

  bool same_shape(const HybridState& o) const {
    return n_ == o.n_ && m_ == o.m_ && q_ == o.q_;
  }

  const Matrix& block(int x, int w) const { return *blocks_[index(x, w)]; }

  void set_block(int x, int w, Matrix b) {
    blocks_[index(x, w)] = std::make_shared<const Matrix>(std::move(b));
  }

  void set_block_zero(int x, int w) { blocks_[index(x, w)] = zero_; }

 private:
  std::size_t index(int x, int w) const {
    return static_cast<std::size_t>(x) * num_w() + w;
  }

  int n_, m_, q_;
  double tol_;
  std::vector<std::shared_ptr<const Matrix>> blocks_;
  std::shared_ptr<const Matrix> zero_;
};

// A unit vector in the quantum memory space, optionally pinned to a classical
// memory label w.
struct PureDirection {
  Vector v;
  std::optional<int> w;

  PureDirection(Vector v_, int w_) : v(std::move(v_)), w(w_) {}
  explicit PureDirection(Vector v_) : v(std::move(v_)) {}
};

inline double total_trace(const HybridState& s) {
  double t = 0.0;
  for (int x = 0; x < s.num_x(); ++x)
    for (int w = 0; w < s.num_w(); ++w) t += s.block(x, w).trace().real();
  return t;
}

// Unnormalized conditional weights x -> <v| rho_{V|x,w} |v> at the given
// memory direction. Entries are clamped to zero from below (drift only).
inline RealVector conditional(const HybridState& s, const PureDirection& d) {
  if (!d.w.has_value())
    throw std::invalid_argument("conditional: direction must carry w");
  if (d.v.size() != s.dim_v())
    throw ShapeError("conditional: direction dimension mismatch");
  RealVector out(s.num_x());
  for (int x = 0; x < s.num_x(); ++x) {
    double val = (d.v.adjoint() * s.block(x, *d.w) * d.v)(0, 0).real();
    out(x) = val < 0.0 ? 0.0 : val;
  }
  return out;
}

// Normalized conditional distribution of X at (v,w). Throws
// ZeroConditionalError when the conditional trace vanishes (the distribution
// does not exist).
inline DistributionX induced_distribution(const HybridState& s,
                                          const PureDirection& d) {
  RealVector c = conditional(s, d);
  double t = c.sum();
  if (t <= s.tol())
    throw ZeroConditionalError("conditional trace " + std::to_string(t));
  return DistributionX(c / t, 1e-12);
}

enum Reg : unsigned { kRegX = 1u, kRegV = 2u, kRegW = 4u };

// Result of a partial trace. When V is dropped the marginal is diagonal and
// reported as a real vector over the kept classical labels (X-major, then W).
// When V is kept, one 2^q x 2^q block per kept classical label is returned.
struct MarginalResult {
  unsigned keep = 0;
  RealVector diag;             // valid when V not kept
  std::vector<Matrix> blocks;  // valid when V kept
};

inline MarginalResult marginal(const HybridState& s, unsigned keep) {
  if (keep == 0 || keep > 7)
    throw std::invalid_argument("marginal: keep must be a nonempty subset");
  MarginalResult r;
  r.keep = keep;
  const bool kx = keep & kRegX, kv = keep & kRegV, kw = keep & kRegW;
  const int nx = kx ? s.num_x() : 1;
  const int nw = kw ? s.num_w() : 1;
  if (!kv) {
    r.diag = RealVector::Zero(static_cast<Eigen::Index>(nx) * nw);
    for (int x = 0; x < s.num_x(); ++x)
      for (int w = 0; w < s.num_w(); ++w) {
        Eigen::Index i = static_cast<Eigen::Index>(kx ? x : 0) * nw +
                         (kw ? w : 0);
        r.diag(i) += s.block(x, w).trace().real();
      }
  } else {
    r.blocks.assign(static_cast<std::size_t>(nx) * nw,
                    Matrix::Zero(s.dim_v(), s.dim_v()));
    for (int x = 0; x < s.num_x(); ++x)
      for (int w = 0; w < s.num_w(); ++w) {
        std::size_t i = static_cast<std::size_t>(kx ? x : 0) * nw +
                        (kw ? w : 0);
        r.blocks[i] += s.block(x, w);
      }
  }
  return r;
}

inline RealVector marginal_x(const HybridState& s) {
  return marginal(s, kRegX).diag;
}

inline Matrix marginal_v(const HybridState& s) {
  return marginal(s, kRegV).blocks[0];
}

// Per-w quantum marginal Sum_x rho_{V|x,w}.
inline Matrix marginal_v_at(const HybridState& s, int w) {
  Matrix t = Matrix::Zero(s.dim_v(), s.dim_v());
  for (int x = 0; x < s.num_x(); ++x) t += s.block(x, w);
  return t;
}

// Removes the direction (v,w) from the system: every block at w becomes
// (I - vv*) B (I - vv*); other memory labels are untouched.
inline HybridState project_out(const HybridState& s, const PureDirection& d) {
  if (!d.w.has_value())
    throw std::invalid_argument("project_out: direction must carry w");
  if (d.v.size() != s.dim_v())
    throw ShapeError("project_out: direction dimension mismatch");
  Matrix proj = Matrix::Identity(s.dim_v(), s.dim_v()) - d.v * d.v.adjoint();
  HybridState out = s;
  for (int x = 0; x < s.num_x(); ++x)
    out.set_block(x, *d.w, psd_repair(proj * s.block(x, *d.w) * proj));
  return out;
}

// Trace distance between two systems with identical shape. Cross-(x,w)
// coherences are zero by representation, so the trace norm decomposes as the
// sum of per-block trace norms.
inline double trace_distance(const HybridState& a, const HybridState& b) {
  if (!a.same_shape(b)) throw ShapeError("trace_distance: shape mismatch");
  double d = 0.0;
  for (int x = 0; x < a.num_x(); ++x)
    for (int w = 0; w < a.num_w(); ++w)
      d += nuclear_norm(a.block(x, w) - b.block(x, w));
  return d;
}

struct StateInvariantReport {
  bool ok = true;
  double max_hermiticity_drift = 0.0;
  double min_eigenvalue = 0.0;
  double total_trace = 0.0;
};

inline StateInvariantReport validate_state(const HybridState& s) {
  StateInvariantReport r;
  for (int x = 0; x < s.num_x(); ++x)
    for (int w = 0; w < s.num_w(); ++w) {
      const Matrix& b = s.block(x, w);
      double h = (b - b.adjoint()).cwiseAbs().maxCoeff();
      r.max_hermiticity_drift = std::max(r.max_hermiticity_drift, h);
      r.min_eigenvalue = std::min(r.min_eigenvalue, min_eigenvalue(b));
      r.total_trace += b.trace().real();
    }
  r.ok = r.max_hermiticity_drift <= s.tol() &&
         r.min_eigenvalue >= -s.tol() && r.total_trace <= 1.0 + s.tol();
  return r;
}

}  // namespace qlml
