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
#include <random>
#include <string_view>

#include "qlml/linalg.hpp"

namespace qlml {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace detail

// A named, indexed substream of a single run seed. All randomness in the
// project flows through these, so the same (seed, name, index) triple always
// reproduces the same draws regardless of evaluation order or thread count.
// Gaussian draws use an explicit Box-Muller transform rather than
// std::normal_distribution so the byte stream is platform-independent.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view substream,
            std::uint64_t index = 0) {
    std::uint64_t x = seed ^ (detail::fnv1a(substream) + 0x632be59bd9b4e019ULL);
    x ^= 0x9e3779b97f4a7c15ULL * (index + 1);
    std::uint64_t s0 = detail::splitmix64(x);
    std::uint64_t s1 = detail::splitmix64(x);
    gen_.seed(s0 ^ (s1 << 1));
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [lo, hi] by rejection.
  int uniform_int(int lo, int hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return lo + static_cast<int>(v % span);
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Complex complex_gaussian() {
    double re = gaussian();
    double im = gaussian();
    return {re, im};
  }

  // Haar-uniform unit vector: normalized standard complex Gaussian.
  Vector haar_unit(int dim) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = complex_gaussian();
    double norm = v.norm();
    while (norm == 0.0) {
      for (int i = 0; i < dim; ++i) v(i) = complex_gaussian();
      norm = v.norm();
    }
    return v / norm;
  }

  Matrix gaussian_matrix(int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = complex_gaussian();
    return m;
  }

  // Random density operator G G^dag / Tr.
  Matrix random_density(int dim) {
    Matrix g = gaussian_matrix(dim, dim);
    Matrix rho = g * g.adjoint();
    return rho / rho.trace().real();
  }

  // Haar-ish unitary via QR of a Gaussian matrix.
  Matrix random_unitary(int dim) {
    Matrix g = gaussian_matrix(dim, dim);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < dim; ++i) {
      Complex d = r(i, i);
      double a = std::abs(d);
      q.col(i) *= (a > 0 ? d / a : Complex(1, 0));
    }
    return q;
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qlml
