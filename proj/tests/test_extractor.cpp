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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "qlml/extractor.hpp"
#include "qlml/rng.hpp"

using namespace qlml;

namespace {

// Feasible random distribution with ||P||_2 <= 2^l 2^(-n/2): mix of uniform
// and a random simplex point, shrunk toward uniform when needed.
RealVector random_feasible(int nx, double l, RngStream& rng) {
  RealVector p(nx);
  for (int i = 0; i < nx; ++i) p(i) = -std::log(1.0 - rng.uniform() + 1e-300);
  p /= p.sum();
  double bound = std::exp2(l) / std::sqrt(static_cast<double>(nx));
  RealVector u = RealVector::Constant(nx, 1.0 / nx);
  if (p.norm() > bound) {
    double s = std::sqrt((bound * bound - u.squaredNorm()) /
                         (p - u).squaredNorm());
    p = u + 0.999999 * s * (p - u);
  }
  return p;
}

}  // namespace

TEST_CASE("inner product matrix entries") {
  BiasMatrix m = inner_product_matrix(2);
  for (int x = 0; x < 4; ++x) CHECK(m(0, x) == 1);   // zero row all ones
  CHECK(m(1, 1) == -1);                              // single-bit product
  for (int a = 0; a < 4; ++a) CHECK(m(a, 0) == 1);   // zero column all ones
  CHECK_THROWS(inner_product_matrix(0));
  CHECK_THROWS(inner_product_matrix(13));
}

TEST_CASE("row correlation") {
  BiasMatrix m = inner_product_matrix(3);
  DistributionX u = DistributionX::uniform(8);
  CHECK(row_correlation(m, 0, u) == doctest::Approx(1.0));
  for (int a = 1; a < 8; ++a)
    CHECK(row_correlation(m, a, u) == doctest::Approx(0.0).epsilon(1e-14));
  DistributionX point = DistributionX::point_mass(8, 5);
  for (int a = 0; a < 8; ++a)
    CHECK(row_correlation(m, a, point) == doctest::Approx(m(a, 5)));
}

TEST_CASE("submatrix bias scan: frozen exhaustive values") {
  BiasMatrix ip2 = inner_product_matrix(2);
  // k=0, l=0: only the full matrix qualifies; its entry sum is 4 (a=0 row)
  {
    int sum = 0;
    for (int a = 0; a < 4; ++a)
      for (int x = 0; x < 4; ++x) sum += ip2(a, x);
    CHECK(sum == 4);
  }
  CHECK(submatrix_bias_scan(ip2, 0, 0) == doctest::Approx(0.25));

  // single entries allowed: bias 1
  CHECK(submatrix_bias_scan(ip2, 2, 2) == doctest::Approx(1.0));

  BiasMatrix ones(4, 4, 1);
  CHECK(submatrix_bias_scan(ones, 0, 0) == doctest::Approx(1.0));
  CHECK(submatrix_bias_scan(ones, 1, 2) == doctest::Approx(1.0));
}

TEST_CASE("submatrix bias scan: monotone in k and l") {
  RngStream rng(3, "scan");
  BiasMatrix m(8, 8);
  for (int a = 0; a < 8; ++a)
    for (int x = 0; x < 8; ++x) m.set(a, x, rng.uniform() < 0.5 ? 1 : -1);
  double prev = 0.0;
  for (double k : {0.0, 1.0, 2.0, 3.0}) {
    double val = submatrix_bias_scan(m, k, k);
    CHECK(val >= prev - 1e-15);
    prev = val;
  }
}

TEST_CASE("submatrix bias scan: randomized mode lower-bounds exhaustive") {
  RngStream rng(5, "scan-r");
  BiasMatrix m(10, 10);
  for (int a = 0; a < 10; ++a)
    for (int x = 0; x < 10; ++x) m.set(a, x, rng.uniform() < 0.5 ? 1 : -1);
  double exact = submatrix_bias_scan(m, 1, 1);
  double sampled = submatrix_bias_scan(m, 1, 1, {.samples = 200, .seed = 9});
  CHECK(sampled <= exact + 1e-12);
  CHECK(sampled > 0.0);

  BiasMatrix big(20, 20);
  CHECK_THROWS(submatrix_bias_scan(big, 1, 1));
  CHECK_NOTHROW(submatrix_bias_scan(big, 1, 1, {.samples = 10, .seed = 1}));
}

TEST_CASE("orthogonal-row identity certifies the extractor exponent") {
  // oracle: Sum_a <M_a,P>^2 = 2^n ||P||_2^2 on random P, then the violating
  // row count stays below the certified fraction
  RngStream rng(21, "parseval");
  for (int n : {8, 10}) {
    double l = n == 8 ? 1.0 : 2.0;
    double r = n == 8 ? 1.0 : 2.0;
    double k = parseval_certificate(n, l, r).k;
    CHECK(k == doctest::Approx(n - 2 * l - 2 * r));
    BiasMatrix m = inner_product_matrix(n);
    int nx = 1 << n;
    for (int trial = 0; trial < 100; ++trial) {
      RealVector p = random_feasible(nx, l, rng);
      double lhs = 0.0;
      int violating = 0;
      for (int a = 0; a < nx; ++a) {
        double c = m.row_vector(a).dot(p);
        lhs += c * c;
        if (std::abs(c) >= std::exp2(-r)) ++violating;
      }
      CHECK(lhs == doctest::Approx(nx * p.squaredNorm()).epsilon(1e-9));
      CHECK(static_cast<double>(violating) / nx <= std::exp2(-k) + 1e-12);
    }
  }
  CHECK(parseval_certificate(8, 1, 1).k == doctest::Approx(4.0));
  CHECK(parseval_certificate(10, 2, 2).k == doctest::Approx(2.0));
  CHECK_THROWS(parseval_certificate(4, 1, 1));  // k would be 0
  CHECK_THROWS(ExtractorParams(1.0, 9.0, 1.0, 8));  // l above n
}

TEST_CASE("violation search: certified witnesses") {
  BiasMatrix ip3 = inner_product_matrix(3);

  // tight ball (l = 0): only the uniform distribution is feasible, and only
  // the zero row correlates; fraction 2^-n
  auto res = l2_violation_search(ip3, 0.0, 1.0, /*seed=*/4, /*restarts=*/8);
  CHECK(res.fraction >= 1.0 / 8 - 1e-12);
  CHECK(res.witness_l2 <= std::exp2(0.0) / std::sqrt(8.0) + 1e-9);

  // l = n/2 admits point masses: every row correlation is 1
  auto res2 = l2_violation_search(ip3, 1.5, 1.0, 4, 8);
  CHECK(res2.fraction == doctest::Approx(1.0));
  CHECK(res2.witness_l2 <= std::exp2(1.5) / std::sqrt(8.0) + 1e-9);

  BiasMatrix ones(8, 8, 1);
  auto res3 = l2_violation_search(ones, 0.0, 2.0, 4, 8);
  CHECK(res3.fraction == doctest::Approx(1.0));  // uniform already violates

  // exact recheck of the reported witness
  int cnt = 0;
  for (int a = 0; a < ip3.rows(); ++a)
    if (std::abs(ip3.row_vector(a).dot(res2.witness)) >= 0.5) ++cnt;
  CHECK(res2.fraction == doctest::Approx(double(cnt) / ip3.rows()));
}

TEST_CASE("quantum extractor error: frozen small cases") {
  // trivial side information, inner product n=2: only the x=0 column has a
  // deterministic answer bit; the dense enumeration oracle fixes the value
  BiasMatrix ip2 = inner_product_matrix(2);
  std::vector<Matrix> trivial(4, Matrix::Identity(1, 1));
  double err = quantum_extractor_error(ip2, trivial);

  double oracle = 0.0;  // brute force over all (b, x)
  for (int x = 0; x < 4; ++x)
    for (int b : {+1, -1}) {
      double mass = 0.0;
      for (int a = 0; a < 4; ++a)
        if (ip2(a, x) == b) mass += 1.0 / 16.0;
      oracle += std::abs(mass - 0.125);
    }
  CHECK(err == doctest::Approx(oracle).epsilon(1e-13));
  CHECK(err == doctest::Approx(0.25));

  // all-ones matrix, trivial side info: the answer bit is deterministic
  BiasMatrix ones(4, 4, 1);
  CHECK(quantum_extractor_error(ones, trivial) == doctest::Approx(1.0));

  // a-independent family, M constant -1 on a balanced split of the columns
  BiasMatrix split(4, 4, 1);
  for (int a = 0; a < 4; ++a)
    for (int x = 2; x < 4; ++x) split.set(a, x, -1);
  RngStream rng(6, "qext");
  Matrix sigma = rng.random_density(2);
  std::vector<Matrix> fam(4, sigma);
  double err2 = quantum_extractor_error(split, fam);
  double oracle2 = 0.0;
  Matrix rho_v = sigma;  // family is constant
  for (int x = 0; x < 4; ++x)
    for (int b : {+1, -1}) {
      Matrix blk = Matrix::Zero(2, 2);
      for (int a = 0; a < 4; ++a)
        if (split(a, x) == b) blk += sigma / 16.0;
      oracle2 += nuclear_norm(blk - rho_v / 8.0);
    }
  CHECK(err2 == doctest::Approx(oracle2).epsilon(1e-12));
  CHECK(err2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quantum extractor error upper-bounds the mean entry") {
  RngStream rng(7, "qext2");
  for (int trial = 0; trial < 10; ++trial) {
    int na = 4 + 2 * (trial % 3);
    int nx = 4;
    BiasMatrix m(na, nx);
    double mean = 0.0;
    for (int a = 0; a < na; ++a)
      for (int x = 0; x < nx; ++x) {
        int e = rng.uniform() < 0.5 ? 1 : -1;
        m.set(a, x, e);
        mean += e;
      }
    mean /= na * nx;
    std::vector<Matrix> trivial(na, Matrix::Identity(1, 1));
    CHECK(quantum_extractor_error(m, trivial) >= std::abs(mean) - 1e-12);
  }
}

TEST_CASE("matrix file format: strict round trip") {
  BiasMatrix ip2 = inner_product_matrix(2);
  std::stringstream ss;
  write_bias_matrix(ss, ip2);
  BiasMatrix back = read_bias_matrix(ss);
  REQUIRE(back.rows() == 4);
  for (int a = 0; a < 4; ++a)
    for (int x = 0; x < 4; ++x) CHECK(back(a, x) == ip2(a, x));

  auto reject = [](const std::string& text) {
    std::stringstream in(text);
    CHECK_THROWS_AS(read_bias_matrix(in), ParseError);
  };
  reject("");
  reject("2\n+1 +1\n+1 +1\n");
  reject("2 2\n+1 +1\n+1 0\n");       // bad token
  reject("2 2\n+1 +1 +1\n+1 +1\n");   // row too long
  reject("2 2\n+1\n+1 +1\n");         // row too short
  reject("2 2\n+1 +1\n");             // missing row
}
