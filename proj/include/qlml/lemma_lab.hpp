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

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "qlml/branching_program.hpp"
#include "qlml/extractor.hpp"
#include "qlml/parallel.hpp"
#include "qlml/rng.hpp"

namespace qlml {

// Exact rational with small components; enough for the parameter arithmetic,
// which only ever divides by 4, 5, 6, 26, 44.
struct Fraction {
  long long num = 0;
  long long den = 1;

  Fraction() = default;
  Fraction(long long n) : num(n), den(1) {}
  Fraction(long long n, long long d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    long long g = std::gcd(std::abs(num), den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  Fraction operator+(const Fraction& o) const {
    return {num * o.den + o.num * den, den * o.den};
  }
  Fraction operator-(const Fraction& o) const {
    return {num * o.den - o.num * den, den * o.den};
  }
  Fraction operator*(const Fraction& o) const {
    return {num * o.num, den * o.den};
  }
  Fraction operator/(const Fraction& o) const {
    return {num * o.den, den * o.num};
  }
  bool operator<=(const Fraction& o) const {
    return num * o.den <= o.num * den;
  }
  bool operator<(const Fraction& o) const { return num * o.den < o.num * den; }
  bool operator>=(const Fraction& o) const { return o <= *this; }

  double value() const { return static_cast<double>(num) / den; }
  bool is_integer() const { return den == 1; }
  std::string str() const {
    return den == 1 ? std::to_string(num)
                    : std::to_string(num) + "/" + std::to_string(den);
  }
};

inline Fraction fraction_min(const Fraction& a, const Fraction& b) {
  return a <= b ? a : b;
}

// The parameter tuple of a run at scale, with the derived exponents and the
// feasibility inequalities. All comparisons are exact rational arithmetic;
// the only non-rational comparison (T against 2^(r-2)) is exact whenever r-2
// is an integer and falls back to extended-precision logarithms otherwise.
struct ParameterSet {
  Fraction n, q, m, T, kp, lp, rp;

  Fraction r() const {
    return fraction_min(fraction_min(rp / 4, lp / 26 + Fraction(1, 6)),
                        (kp - 1) / 2);
  }
  Fraction k() const { return kp - 1; }
  Fraction l() const { return (lp - Fraction(13) * r() - 2) / 5; }
};

struct InequalityResult {
  std::string name;
  bool pass = true;
  std::string detail;
};

inline std::vector<InequalityResult> parameter_check(const ParameterSet& p) {
  std::vector<InequalityResult> out;
  Fraction r = p.r(), k = p.k(), l = p.l();
  auto add = [&](const std::string& name, bool pass,
                 const std::string& detail) {
    out.push_back({name, pass, detail});
  };

  Fraction lhs1 = p.q + r + 1 - p.rp;
  Fraction rhs1 = Fraction(-2) * r;
  add("sample-exponent", lhs1 <= rhs1, lhs1.str() + " <= " + rhs1.str());

  Fraction lhs2 = Fraction(2) * l + Fraction(9) * r - p.n;
  Fraction rhs2 = Fraction(-1) * r;
  add("column-exponent", lhs2 <= rhs2, lhs2.str() + " <= " + rhs2.str());

  Fraction lhs3 = (k - r) * l;
  Fraction rhs3 = Fraction(2) * p.m + Fraction(4) * r + 1;
  add("memory-exponent", lhs3 >= rhs3, lhs3.str() + " >= " + rhs3.str());

  add("column-cap", p.lp <= p.n, p.lp.str() + " <= " + p.n.str());
  add("qubit-cap", p.q <= r - 7, p.q.str() + " <= " + (r - 7).str());
  Fraction mcap = (p.kp - 1) * p.lp / 44;
  add("memory-cap", p.m <= mcap, p.m.str() + " <= " + mcap.str());

  // T <= 2^(r-2)
  Fraction e = r - 2;
  bool t_ok;
  if (e.is_integer()) {
    if (e.num >= 63 || e.num <= -63)
      t_ok = e.num > 0;
    else if (e.num >= 0)
      t_ok = p.T <= Fraction(1LL << e.num);
    else
      t_ok = p.T * Fraction(1LL << (-e.num)) <= Fraction(1);
  } else {
    long double lt = logl(static_cast<long double>(p.T.num) / p.T.den);
    long double re = static_cast<long double>(e.num) / e.den * logl(2.0L);
    t_ok = lt <= re + 1e-15L;
  }
  add("length-cap", t_ok, p.T.str() + " <= 2^(" + e.str() + ")");
  return out;
}

inline bool parameter_check_all(const ParameterSet& p) {
  for (const auto& res : parameter_check(p))
    if (!res.pass) return false;
  return true;
}

struct AnticcResult {
  double empirical = 0.0;
  double bound = 0.0;
  std::int64_t samples = 0;
};

// Probability that the quadratic form of a Haar-random unit vector lands
// within eps * ||sigma||_2 / d of zero, estimated by Monte Carlo against the
// calibrated bound c sqrt(eps) + e^-d. Unit vectors are normalized standard
// complex Gaussians; trials run on per-index substreams so the estimate is
// thread-count independent.
inline AnticcResult anticoncentration_estimate(const Matrix& sigma, double eps,
                                               std::int64_t samples,
                                               std::uint64_t seed,
                                               double c = 10.0) {
  const int d = static_cast<int>(sigma.rows());
  if (d > 64)
    throw std::invalid_argument("anticoncentration: dimension capped at 64");
  double norm = spectral_norm(sigma);
  if (norm == 0.0)
    throw std::invalid_argument("anticoncentration: zero operator");
  const double cutoff = eps * norm / d;

  const int chunks = 64;
  std::vector<std::int64_t> hits(chunks, 0);
  parallel_for(chunks, [&](int chunk) {
    std::int64_t lo = samples * chunk / chunks;
    std::int64_t hi = samples * (chunk + 1) / chunks;
    RngStream rng(seed, "anticc", static_cast<std::uint64_t>(chunk));
    std::int64_t h = 0;
    for (std::int64_t i = lo; i < hi; ++i) {
      Vector v = rng.haar_unit(d);
      double form = (v.adjoint() * sigma * v)(0, 0).real();
      if (std::abs(form) <= cutoff) ++h;
    }
    hits[chunk] = h;
  });
  std::int64_t total = 0;
  for (auto h : hits) total += h;
  AnticcResult out;
  out.samples = samples;
  out.empirical = static_cast<double>(total) / samples;
  out.bound = c * std::sqrt(eps) + std::exp(-static_cast<double>(d));
  return out;
}

// Closed form for d = 2, sigma = diag(1,-1): |v1|^2 - |v2|^2 is uniform on
// [-1, 1], so the probability is exactly min(eps/2, 1).
inline double anticoncentration_closed_form_d2(double eps) {
  return std::min(eps / 2.0, 1.0);
}

struct InequalityCheck {
  bool pass = true;
  double lhs = 0.0;
  double rhs = 0.0;
};

// Projection cannot move a subnormalized state further than the weight it
// removes allows: ||rho - P rho P||_Tr^2 <= 4 tr[rho]^2 - 4 tr[P rho]^2.
inline InequalityCheck projection_distance_weight_check(const Matrix& rho,
                                                        const Matrix& proj,
                                                        double slack = 1e-8) {
  if ((proj * proj - proj).cwiseAbs().maxCoeff() > 1e-9 ||
      (proj - proj.adjoint()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("projection_distance_weight_check: not a projection");
  InequalityCheck out;
  double tr = rho.trace().real();
  double trp = (proj * rho).trace().real();
  double dist = nuclear_norm(rho - proj * rho * proj);
  out.lhs = dist * dist;
  out.rhs = 4.0 * tr * tr - 4.0 * trp * trp;
  out.pass = out.lhs <= out.rhs + slack;
  return out;
}

struct FvdgCheck {
  bool pass = true;
  double lhs = 0.0;
  double mid = 0.0;
  double rhs = 0.0;
};

// Fidelity-distance inequality for subnormalized operators with
// tr[rho] >= tr[sigma], squared-fidelity convention:
// (1/2)||rho - sigma||_Tr <= sqrt((tr rho + tr sigma)^2 / 4 - F)
//                         <= sqrt(tr[rho]^2 - F).
inline FvdgCheck fvdg_variant_check(const Matrix& rho, const Matrix& sig,
                                    double slack = 1e-8) {
  double tr = rho.trace().real(), ts = sig.trace().real();
  if (tr < ts - 1e-12)
    throw std::invalid_argument("fvdg_variant_check: need tr[rho] >= tr[sigma]");
  FvdgCheck out;
  double f = fidelity(rho, sig);
  out.lhs = 0.5 * nuclear_norm(rho - sig);
  out.mid = std::sqrt(std::max(0.25 * (tr + ts) * (tr + ts) - f, 0.0));
  out.rhs = std::sqrt(std::max(tr * tr - f, 0.0));
  out.pass = out.lhs <= out.mid + slack && out.mid <= out.rhs + slack;
  return out;
}

// A classical-quantum system over a classical X and quantum V, stored as the
// per-x blocks (each PSD; total trace 1 for a normalized system).
using CqState = std::vector<Matrix>;

inline Matrix cq_marginal_v(const CqState& s) {
  Matrix acc = Matrix::Zero(s[0].rows(), s[0].cols());
  for (const Matrix& b : s) acc += b;
  return acc;
}

struct XiResult {
  double hat = 0.0;  // || rho_XV - rho_X (x) rho_V ||_Tr
  double lower = 0.0;  // true dependency lies in [hat/2, hat]
};

// Dependency of V on X: trace distance to the product with the V marginal.
// Substituting the marginal for the optimal factor loses at most a factor 2.
inline XiResult xi_dependency(const CqState& s) {
  Matrix rho_v = cq_marginal_v(s);
  XiResult out;
  for (const Matrix& b : s) {
    double px = b.trace().real();
    out.hat += nuclear_norm(b - px * rho_v);
  }
  out.lower = out.hat / 2.0;
  return out;
}

// Exact minimization over the factor state for one qubit: dense grid over
// the Bloch ball. Oracle-grade; used to validate the bracket above.
inline double xi_dependency_grid_oracle(const CqState& s, int shells = 12,
                                        int sphere_points = 900) {
  Matrix sx(2, 2), sy(2, 2), sz(2, 2);
  sx << 0, 1, 1, 0;
  sy << 0, Complex(0, -1), Complex(0, 1), 0;
  sz << 1, 0, 0, -1;
  double best = 1e300;
  int nt = static_cast<int>(std::sqrt(sphere_points / 2.0));
  for (int is = 0; is <= shells; ++is) {
    double rad = static_cast<double>(is) / shells;
    for (int it = 0; it <= nt; ++it)
      for (int ip = 0; ip < 2 * nt; ++ip) {
        double th = M_PI * it / nt, ph = M_PI * ip / nt;
        Matrix tau = 0.5 * (Matrix::Identity(2, 2) +
                            rad * std::sin(th) * std::cos(ph) * sx +
                            rad * std::sin(th) * std::sin(ph) * sy +
                            rad * std::cos(th) * sz);
        double d = 0.0;
        for (const Matrix& b : s)
          d += nuclear_norm(b - b.trace().real() * tau);
        best = std::min(best, d);
      }
  }
  return best;
}

inline double entropy_bits(const Matrix& rho) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(rho),
                                           Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    double lam = es.eigenvalues()(i);
    if (lam > 1e-15) s -= lam * std::log2(lam);
  }
  return s;
}

// I(X : V) in bits. Block-diagonal structure makes S(XV) the sum over the
// per-x block spectra.
inline double mutual_information(const CqState& s) {
  double s_xv = 0.0, s_x = 0.0;
  for (const Matrix& b : s) {
    s_xv += entropy_bits(b);
    double px = b.trace().real();
    if (px > 1e-15) s_x -= px * std::log2(px);
  }
  double s_v = entropy_bits(cq_marginal_v(s));
  double mi = s_x + s_v - s_xv;
  return mi < 0 && mi > -1e-9 ? 0.0 : mi;
}

struct DependencyMiCheck {
  bool pass = true;
  double mi = 0.0;
  double lower = 0.0;  // (1/2)(hat/2)^2
  double upper = 0.0;  // q hat + 2 sqrt(hat)
};

// Mutual information is squeezed between quadratic and linear functions of
// the dependency: (1/2) xi^2 <= I <= q xi + 2 sqrt(xi), checked through the
// two-sided bracket [hat/2, hat].
inline DependencyMiCheck dependency_mi_check(const CqState& s, int q,
                                             double slack = 1e-8) {
  DependencyMiCheck out;
  XiResult xi = xi_dependency(s);
  out.mi = mutual_information(s);
  out.lower = 0.5 * (xi.hat / 2.0) * (xi.hat / 2.0);
  out.upper = q * xi.hat + 2.0 * std::sqrt(xi.hat);
  out.pass = out.lower <= out.mi + slack && out.mi <= out.upper + slack;
  return out;
}

struct QuantumMemoryBoundCheck {
  bool pass = true;
  double success = 0.0;
  double bound = 0.0;
  double r_hat = 0.0;
};

// Success bound for programs without classical memory: a program with q/2
// qubits against a matrix whose quantum extractor error at side-information
// width q is 2^-r cannot beat 2^-n + 8 T sqrt(n+q) 2^(-r/4). The extractor
// exponent is measured on a family zoo at the instance's scale, which makes
// the asserted bound conservative-in-measurement; margins are informational.
inline QuantumMemoryBoundCheck quantum_memory_bound_check(
    const LearningInstance& inst, const BranchingProgram& prog,
    double slack = 1e-9) {
  if (inst.m != 0)
    throw std::invalid_argument("quantum_memory_bound_check: needs m = 0");
  const int q_side = 2 * inst.q;
  const int d = 1 << q_side;
  const int na = inst.M.rows();

  // side-information family zoo: basis copy of a, fully mixed, seeded random
  double err = 0.0;
  {
    std::vector<Matrix> fam(na);
    for (int a = 0; a < na; ++a) {
      Vector e = Vector::Unit(d, a % d);
      fam[a] = e * e.adjoint();
    }
    err = std::max(err, quantum_extractor_error(inst.M, fam));
    for (int a = 0; a < na; ++a)
      fam[a] = Matrix::Identity(d, d) / static_cast<double>(d);
    err = std::max(err, quantum_extractor_error(inst.M, fam));
    RngStream rng(2026, "qext-zoo");
    for (int a = 0; a < na; ++a) fam[a] = rng.random_density(d);
    err = std::max(err, quantum_extractor_error(inst.M, fam));
  }

  QuantumMemoryBoundCheck out;
  out.r_hat = -std::log2(std::max(err, 1e-300));
  auto stages = run_program(inst, prog);
  out.success = success_probability(stages.back(), prog);
  out.bound = std::exp2(-inst.n) +
              8.0 * inst.T * std::sqrt(static_cast<double>(inst.n + q_side)) *
                  std::exp2(-out.r_hat / 4.0);
  out.pass = out.success <= out.bound + slack;
  return out;
}

}  // namespace qlml
