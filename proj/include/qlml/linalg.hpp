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

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <utility>

#include "qlml/config.hpp"

namespace qlml {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

// Trace norm of a Hermitian operator: sum of absolute eigenvalues.
inline double nuclear_norm(const Matrix& h) {
  if (h.rows() == 1) return std::abs(h(0, 0).real());
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(h),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

inline double spectral_norm(const Matrix& h) {
  if (h.rows() == 1) return std::abs(h(0, 0).real());
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(h),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double min_eigenvalue(const Matrix& h) {
  if (h.rows() == 1) return h(0, 0).real();
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(h),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Symmetrize and clamp small negative eigenvalues to zero. Eigenvalues below
// -abort_below indicate a genuine positivity bug and throw.
inline Matrix psd_repair(const Matrix& m, double abort_below = kPsdAbort) {
  Matrix h = hermitize(m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  RealVector ev = es.eigenvalues();
  bool dirty = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -abort_below) {
      throw PsdViolationError("eigenvalue " + std::to_string(ev(i)) +
                              " below positivity abort threshold");
    }
    if (ev(i) < 0.0) {
      ev(i) = 0.0;
      dirty = true;
    }
  }
  if (!dirty) return h;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

inline Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m));
  RealVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

// Squared fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2 of two positive
// semi-definite operators; lies in [0, Tr[a] Tr[b]].
inline double fidelity(const Matrix& a, const Matrix& b,
                       double tol = kDefaultTol) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("fidelity: dimension mismatch");
  if (min_eigenvalue(a) < -tol || min_eigenvalue(b) < -tol)
    throw std::invalid_argument("fidelity: input not positive semi-definite");
  Matrix ra = psd_sqrt(a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(ra * b * ra),
                                           Eigen::EigenvaluesOnly);
  double root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return root * root;
}

// Orthonormal basis (as columns) of the eigenspace of a PSD operator with
// eigenvalues above the floor.
inline Matrix support_basis(const Matrix& psd, double floor_abs) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(psd));
  const RealVector& ev = es.eigenvalues();
  int keep = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > floor_abs) ++keep;
  Matrix basis(psd.rows(), keep);
  int j = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > floor_abs) basis.col(j++) = es.eigenvectors().col(i);
  return basis;
}

// Largest eigenvalue and its eigenvector of a Hermitian operator.
inline std::pair<double, Vector> top_eigenpair(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(h));
  Eigen::Index last = h.rows() - 1;
  return {es.eigenvalues()(last), es.eigenvectors().col(last)};
}

// Eigenvalue of largest magnitude and its eigenvector.
inline std::pair<double, Vector> extreme_eigenpair(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(h));
  Eigen::Index last = h.rows() - 1;
  if (std::abs(es.eigenvalues()(0)) > std::abs(es.eigenvalues()(last)))
    return {es.eigenvalues()(0), es.eigenvectors().col(0)};
  return {es.eigenvalues()(last), es.eigenvectors().col(last)};
}

}  // namespace qlml
