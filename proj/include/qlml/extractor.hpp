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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "qlml/bias_matrix.hpp"
#include "qlml/rng.hpp"

namespace qlml {

// Exponent triple of the L2-extractor property: distributions P with
// ||P||_2 <= 2^l 2^(-n/2) correlate above 2^(-r) with at most a 2^(-k)
// fraction of rows.
struct ExtractorParams {
  double k = 0.0;
  double l = 0.0;
  double r = 0.0;

  ExtractorParams() = default;
  ExtractorParams(double k_, double l_, double r_, int n)
      : k(k_), l(l_), r(r_) {
    if (l > n || r < 0)
      throw std::invalid_argument("ExtractorParams: need l <= n and r >= 0");
  }
};

struct BiasScanOptions {
  // samples > 0 switches to randomized mode (required beyond 16x16); the
  // result is then a lower bound on the true maximum.
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
};

namespace detail {

// Best |sum|/area over column subsets of size >= min_cols for fixed row set.
inline double best_column_bias(const std::vector<double>& colsums,
                               int row_count, int min_cols) {
  std::vector<double> sorted(colsums);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  int cols = static_cast<int>(sorted.size());
  double best = 0.0, pos = 0.0, neg = 0.0;
  for (int c = 1; c <= cols; ++c) {
    pos += sorted[c - 1];
    neg += sorted[cols - c];
    if (c < min_cols) continue;
    double area = static_cast<double>(row_count) * c;
    best = std::max(best, std::max(std::abs(pos), std::abs(neg)) / area);
  }
  return best;
}

inline int min_count(double exponent, int total) {
  // smallest integer >= 2^(-exponent) * total, with a guard against
  // floating roundoff at exact powers of two
  double target = std::ldexp(static_cast<double>(total), 0) *
                  std::exp2(-exponent);
  int c = static_cast<int>(std::ceil(target - 1e-9));
  return std::clamp(c, 1, total);
}

}  // namespace detail

// Maximum relative bias |sum of entries| / (#rows * #cols) over submatrices
// with at least 2^(-k)|A| rows and 2^(-l)|X| columns. Exhaustive over row
// subsets up to 16x16; the column side is solved exactly by sorting.
inline double submatrix_bias_scan(const BiasMatrix& m, double k, double l,
                                  const BiasScanOptions& opt = {}) {
  const int rows = m.rows(), cols = m.cols();
  const int min_rows = detail::min_count(k, rows);
  const int min_cols = detail::min_count(l, cols);
  double best = 0.0;

  if (opt.samples <= 0) {
    if (rows > 16 || cols > 16)
      throw std::invalid_argument(
          "submatrix_bias_scan: exhaustive mode capped at 16x16; "
          "set samples for randomized mode");
    for (std::uint32_t mask = 1; mask < (1u << rows); ++mask) {
      int rc = std::popcount(mask);
      if (rc < min_rows) continue;
      std::vector<double> colsums(cols, 0.0);
      for (int a = 0; a < rows; ++a)
        if (mask & (1u << a))
          for (int x = 0; x < cols; ++x) colsums[x] += m(a, x);
      best = std::max(best, detail::best_column_bias(colsums, rc, min_cols));
    }
    return best;
  }

  RngStream rng(opt.seed, "bias-scan");
  std::vector<int> order(rows);
  std::iota(order.begin(), order.end(), 0);
  for (std::int64_t s = 0; s < opt.samples; ++s) {
    int rc = rng.uniform_int(min_rows, rows);
    for (int i = 0; i < rc; ++i) {
      int j = rng.uniform_int(i, rows - 1);
      std::swap(order[i], order[j]);
    }
    std::vector<double> colsums(cols, 0.0);
    for (int i = 0; i < rc; ++i)
      for (int x = 0; x < cols; ++x) colsums[x] += m(order[i], x);
    best = std::max(best, detail::best_column_bias(colsums, rc, min_cols));
  }
  return best;
}

// Analytic extractor exponent for inner-product matrices. The rows of
// M / 2^(n/2) are orthogonal, so Sum_a <M_a, P>^2 = 2^n ||P||_2^2; with
// ||P||_2 <= 2^l 2^(-n/2) at most 2^(2l+2r) rows can reach correlation
// 2^(-r), a 2^(-(n-2l-2r)) fraction.
inline ExtractorParams parseval_certificate(int n, double l, double r) {
  double k = n - 2.0 * l - 2.0 * r;
  if (k <= 0.0)
    throw std::invalid_argument(
        "parseval_certificate: need n > 2l + 2r, got k = " +
        std::to_string(k));
  return ExtractorParams(k, l, r, n);
}

struct ViolationSearchResult {
  double fraction = 0.0;   // certified: recomputed exactly on the witness
  RealVector witness;      // the distribution achieving it
  double witness_l2 = 0.0;
  int restarts_used = 0;
};

namespace detail {

inline void project_to_simplex(RealVector& p) {
  const int n = static_cast<int>(p.size());
  std::vector<double> u(p.data(), p.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (int i = 0; i < n; ++i) {
    css += u[i];
    double t = (css - 1.0) / (i + 1);
    if (u[i] - t > 0) theta = t;
  }
  for (int i = 0; i < n; ++i) p(i) = std::max(0.0, p(i) - theta);
}

// Pull p toward uniform until ||p||_2 <= bound; stays on the simplex since
// <u, p - u> = 0 for simplex points.
inline void shrink_to_l2_ball(RealVector& p, double bound) {
  const int n = static_cast<int>(p.size());
  RealVector u = RealVector::Constant(n, 1.0 / n);
  double norm = p.norm();
  if (norm <= bound) return;
  double d2 = (p - u).squaredNorm();
  double target = bound * bound - u.squaredNorm();
  if (target <= 0 || d2 <= 0) {
    p = u;
    return;
  }
  double s = std::sqrt(target / d2) * (1.0 - 1e-12);
  p = u + s * (p - u);
}

}  // namespace detail

// Heuristic maximization, over feasible distributions, of the fraction of
// rows whose correlation reaches 2^(-r). Projected gradient ascent on a
// softplus-smoothed count, restarted from uniform, point masses and random
// simplex points. The returned fraction is a certified lower bound: the
// witness is; re-checked exactly against the raw definition.
inline ViolationSearchResult l2_violation_search(const BiasMatrix& m, double l,
                                                 double r, std::uint64_t seed,
                                                 int restarts = 32) {
  const int nx = m.cols();
  if (nx > 1024)
    throw std::invalid_argument("l2_violation_search: |X| capped at 2^10");
  const double n_bits = std::log2(static_cast<double>(nx));
  const double bound = std::exp2(l) * std::exp2(-n_bits / 2.0);
  const double theta = std::exp2(-r);
  const double kappa = 32.0 / theta;

  auto exact_fraction = [&](const RealVector& p) {
    int cnt = 0;
    for (int a = 0; a < m.rows(); ++a)
      if (std::abs(m.row_vector(a).dot(p)) >= theta) ++cnt;
    return static_cast<double>(cnt) / m.rows();
  };

  auto feasible = [&](RealVector p) {
    detail::project_to_simplex(p);
    detail::shrink_to_l2_ball(p, bound);
    return p;
  };

  std::vector<RealVector> starts;
  starts.push_back(RealVector::Constant(nx, 1.0 / nx));
  for (int x = 0; x < std::min(nx, 64); ++x) {
    RealVector p = RealVector::Zero(nx);
    p(x) = 1.0;
    starts.push_back(p);
  }
  RngStream rng(seed, "l2-violation");
  while (static_cast<int>(starts.size()) < restarts + 1 + std::min(nx, 64)) {
    RealVector p(nx);
    for (int i = 0; i < nx; ++i) p(i) = -std::log(1.0 - rng.uniform() + 1e-300);
    starts.push_back(p / p.sum());
  }

  ViolationSearchResult best;
  best.witness = feasible(starts[0]);
  for (auto& s0 : starts) {
    RealVector p = feasible(s0);
    double step = 0.5 / m.rows();
    for (int it = 0; it < 80; ++it) {
      RealVector grad = RealVector::Zero(nx);
      for (int a = 0; a < m.rows(); ++a) {
        RealVector row = m.row_vector(a);
        double c = row.dot(p);
        double z = kappa * (std::abs(c) - theta);
        double sig = z > 30 ? 1.0 : (z < -30 ? 0.0 : 1.0 / (1.0 + std::exp(-z)));
        grad += sig * (c >= 0 ? 1.0 : -1.0) * row;
      }
      RealVector next = feasible(p + step * grad);
      if ((next - p).norm() < 1e-12) break;
      p = next;
    }
    double frac = exact_fraction(p);
    ++best.restarts_used;
    if (frac > best.fraction ||
        (best.fraction == 0.0 && best.witness.size() == 0)) {
      best.fraction = frac;
      best.witness = p;
    }
  }
  best.witness_l2 = best.witness.norm();
  return best;
}

// Exact deviation of the (sample bit, concept, side information) system from
// uniform-bit x independent: || rho_{M(A,X) X V} - U (x) rho_X (x) rho_V ||_Tr
// for a side-information family a -> rho_{V|a} (each of unit trace) that
// depends only on a. Blocks over (b, x) carry weight 1/(|A||X|) each.
inline double quantum_extractor_error(const BiasMatrix& m,
                                      const std::vector<Matrix>& family) {
  const int na = m.rows(), nx = m.cols();
  if (static_cast<int>(family.size()) != na)
    throw ShapeError("quantum_extractor_error: family size mismatch");
  const Eigen::Index d = family.empty() ? 1 : family[0].rows();
  Matrix rho_v = Matrix::Zero(d, d);
  for (const auto& f : family) rho_v += f;
  rho_v /= static_cast<double>(na);

  const double cell = 1.0 / (static_cast<double>(na) * nx);
  double err = 0.0;
  for (int x = 0; x < nx; ++x) {
    for (int b : {+1, -1}) {
      Matrix blk = Matrix::Zero(d, d);
      for (int a = 0; a < na; ++a)
        if (m(a, x) == b) blk += family[a];
      blk *= cell;
      err += nuclear_norm(blk - (0.5 / nx) * rho_v);
    }
  }
  return err;
}

}  // namespace qlml
