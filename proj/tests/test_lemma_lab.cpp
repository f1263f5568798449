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

#include "qlml/lemma_lab.hpp"
#include "test_support.hpp"

using namespace qlml;

namespace {

// random classical-quantum system with the classical side uniform-ish
CqState random_cq(int nx, int d, RngStream& rng) {
  CqState s;
  double total = 0.0;
  std::vector<double> weights(nx);
  for (auto& w : weights) {
    w = -std::log(1.0 - rng.uniform() + 1e-300);
    total += w;
  }
  for (int x = 0; x < nx; ++x)
    s.push_back((weights[x] / total) * rng.random_density(d));
  return s;
}

ParameterSet worked_tuple() {
  ParameterSet p;
  p.n = 260;
  p.kp = 101;
  p.lp = 260;
  p.rp = 40;
  p.q = 3;
  p.m = 590;
  p.T = 256;
  return p;
}

}  // namespace

TEST_CASE("fraction arithmetic is exact") {
  Fraction a(1, 3), b(1, 6);
  CHECK((a + b).num == 1);
  CHECK((a + b).den == 2);
  CHECK((a - b).num == 1);
  CHECK((a - b).den == 6);
  CHECK((a * b).den == 18);
  CHECK(Fraction(7, 1).is_integer());
  CHECK(fraction_min(a, b).num == 1);
  CHECK(fraction_min(a, b).den == 6);
}

TEST_CASE("parameter feasibility: the worked tuple passes") {
  ParameterSet p = worked_tuple();
  CHECK(p.r().value() == doctest::Approx(10.0));
  CHECK(p.k().value() == doctest::Approx(100.0));
  CHECK(p.l().value() == doctest::Approx(25.6));
  auto results = parameter_check(p);
  for (const auto& res : results) {
    INFO(res.name, ": ", res.detail);
    CHECK(res.pass);
  }
  // spot values of the three main inequalities
  CHECK((p.q + p.r() + 1 - p.rp).value() == doctest::Approx(-26.0));
  CHECK((Fraction(2) * p.l() + Fraction(9) * p.r() - p.n).value() ==
        doctest::Approx(-118.8));
  CHECK(((p.k() - p.r()) * p.l()).value() == doctest::Approx(2304.0));
}

TEST_CASE("parameter feasibility: single-field perturbations are rejected") {
  auto fails = [](ParameterSet p, const std::string& which) {
    auto results = parameter_check(p);
    for (const auto& res : results)
      if (res.name == which && !res.pass) return true;
    return false;
  };
  ParameterSet p = worked_tuple();

  p.q = 4;  // needs q <= r - 7 = 3
  CHECK(fails(p, "qubit-cap"));

  p = worked_tuple();
  p.lp = 261;  // needs lp <= n
  CHECK(fails(p, "column-cap"));

  p = worked_tuple();
  p.n = 259;
  CHECK(fails(p, "column-cap"));

  p = worked_tuple();
  p.m = 591;  // needs m <= (kp-1) lp / 44 = 590.9
  CHECK(fails(p, "memory-cap"));

  p = worked_tuple();
  p.T = 257;  // needs T <= 2^(r-2) = 256
  CHECK(fails(p, "length-cap"));

  p = worked_tuple();
  p.kp = 3;  // r collapses to 1, memory inequality breaks badly
  CHECK(!parameter_check_all(p));
}

TEST_CASE("anti-concentration: identity never concentrates at zero") {
  Matrix id = Matrix::Identity(4, 4);
  auto res = anticoncentration_estimate(id, 0.5, 2000, 3);
  CHECK(res.empirical == 0.0);  // the form is identically 1
  CHECK_THROWS(anticoncentration_estimate(Matrix::Zero(2, 2), 0.5, 100, 1));
}

TEST_CASE("anti-concentration: d=2 closed form matches Monte Carlo") {
  Matrix sigma(2, 2);
  sigma << 1, 0, 0, -1;
  const double eps = 0.5;
  CHECK(anticoncentration_closed_form_d2(eps) == doctest::Approx(0.25));
  const std::int64_t samples = 200000;
  auto res = anticoncentration_estimate(sigma, eps, samples, 11);
  double p = anticoncentration_closed_form_d2(eps);
  double se = std::sqrt(p * (1 - p) / samples);
  CHECK(std::abs(res.empirical - p) <= 3 * se);
}

TEST_CASE("anti-concentration: monotone in eps and under the bound") {
  RngStream rng(12, "anticc-test");
  Matrix g = rng.gaussian_matrix(8, 8);
  Matrix sigma = hermitize(g);
  double prev = 0.0;
  for (double eps : {1e-4, 1e-3, 1e-2, 0.04, 0.09}) {
    auto res = anticoncentration_estimate(sigma, eps, 20000, 5);
    CHECK(res.empirical >= prev);
    CHECK(res.empirical <= res.bound);
    prev = res.empirical;
  }
}

TEST_CASE("projection distance-weight inequality") {
  Matrix pure0 = Vector::Unit(2, 0) * Vector::Unit(2, 0).adjoint();
  Matrix pure1 = Vector::Unit(2, 1) * Vector::Unit(2, 1).adjoint();

  auto full = projection_distance_weight_check(pure0, Matrix::Identity(2, 2));
  CHECK(full.lhs == doctest::Approx(0.0));
  CHECK(full.pass);

  auto ortho = projection_distance_weight_check(pure0, pure1);
  CHECK(ortho.lhs == doctest::Approx(1.0));
  CHECK(ortho.rhs == doctest::Approx(4.0));
  CHECK(ortho.pass);

  RngStream rng(13, "pdw");
  for (int trial = 0; trial < 200; ++trial) {
    int d = 2 + rng.uniform_int(0, 14);
    Matrix rho = rng.uniform() * rng.random_density(d);
    int rank = 1 + rng.uniform_int(0, d - 1);
    Matrix u = rng.random_unitary(d);
    Matrix proj = Matrix::Zero(d, d);
    for (int i = 0; i < rank; ++i)
      proj += u.col(i) * u.col(i).adjoint();
    CHECK(projection_distance_weight_check(rho, proj).pass);
  }

  Matrix not_proj = 0.5 * Matrix::Identity(2, 2);
  CHECK_THROWS(projection_distance_weight_check(pure0, not_proj));
}

TEST_CASE("fidelity-distance inequality for subnormalized operators") {
  Matrix pure0 = Vector::Unit(2, 0) * Vector::Unit(2, 0).adjoint();
  Matrix pure1 = Vector::Unit(2, 1) * Vector::Unit(2, 1).adjoint();

  auto same = fvdg_variant_check(pure0, pure0);
  CHECK(same.lhs == doctest::Approx(0.0));
  CHECK(same.pass);

  // orthogonal pure states: equality through the whole chain
  auto ortho = fvdg_variant_check(pure0, pure1);
  CHECK(ortho.lhs == doctest::Approx(1.0));
  CHECK(ortho.mid == doctest::Approx(1.0));
  CHECK(ortho.pass);

  RngStream rng(14, "fvdg");
  for (int trial = 0; trial < 200; ++trial) {
    int d = 2 + rng.uniform_int(0, 6);
    Matrix rho = rng.uniform() * rng.random_density(d);
    Matrix sig = rng.uniform() * rng.random_density(d);
    if (rho.trace().real() < sig.trace().real()) std::swap(rho, sig);
    CHECK(fvdg_variant_check(rho, sig).pass);
  }

  CHECK_THROWS(fvdg_variant_check(0.2 * pure0, 0.9 * pure1));
}

TEST_CASE("dependency: products, copies, and noisy copies") {
  // product: zero
  RngStream rng(15, "xi");
  {
    Matrix tau = rng.random_density(2);
    CqState prod{0.5 * tau, 0.5 * tau};
    CHECK(xi_dependency(prod).hat == doctest::Approx(0.0).epsilon(1e-12));
  }
  // perfect classical copy: distance 1
  {
    CqState copy{0.5 * Vector::Unit(2, 0) * Vector::Unit(2, 0).adjoint(),
                 0.5 * Vector::Unit(2, 1) * Vector::Unit(2, 1).adjoint()};
    CHECK(xi_dependency(copy).hat == doctest::Approx(1.0));
  }
  // noisy copy: depolarizing weight lambda scales the distance linearly
  for (double lambda : {0.25, 0.6}) {
    CqState noisy;
    for (int x = 0; x < 2; ++x) {
      Matrix pure = Vector::Unit(2, x) * Vector::Unit(2, x).adjoint();
      noisy.push_back(0.5 * (lambda * pure +
                             (1 - lambda) * 0.5 * Matrix::Identity(2, 2)));
    }
    CHECK(xi_dependency(noisy).hat == doctest::Approx(lambda).epsilon(1e-10));
  }
}

TEST_CASE("dependency bracket validated by the one-qubit grid oracle") {
  RngStream rng(16, "xi-grid");
  for (int trial = 0; trial < 5; ++trial) {
    CqState s = random_cq(4, 2, rng);
    XiResult xi = xi_dependency(s);
    double oracle = xi_dependency_grid_oracle(s);
    // grid resolution allowance
    CHECK(oracle <= xi.hat + 1e-9);
    CHECK(oracle >= xi.lower - 0.05);
  }
}

TEST_CASE("mutual information: frozen values and subadditivity") {
  // product: zero
  RngStream rng(17, "mi");
  Matrix tau = rng.random_density(2);
  CqState prod{0.5 * tau, 0.5 * tau};
  CHECK(mutual_information(prod) == doctest::Approx(0.0).epsilon(1e-10));

  // perfect classical bit correlation: one bit
  CqState copy{0.5 * Vector::Unit(2, 0) * Vector::Unit(2, 0).adjoint(),
               0.5 * Vector::Unit(2, 1) * Vector::Unit(2, 1).adjoint()};
  CHECK(mutual_information(copy) == doctest::Approx(1.0));

  // with X classical the information caps at the X entropy (here 1 bit)
  CHECK(mutual_information(copy) <= 1.0 + 1e-12);

  // subadditivity of entropy on random instances
  for (int trial = 0; trial < 30; ++trial) {
    CqState s = random_cq(4, 4, rng);
    double s_xv = 0.0, s_x = 0.0;
    for (const Matrix& b : s) {
      s_xv += entropy_bits(b);
      double px = b.trace().real();
      if (px > 1e-15) s_x -= px * std::log2(px);
    }
    CHECK(s_xv <= s_x + entropy_bits(cq_marginal_v(s)) + 1e-8);
    CHECK(mutual_information(s) >= -1e-9);
  }
}

TEST_CASE("dependency vs mutual information bounds") {
  RngStream rng(18, "dep-mi");
  // product and perfect-copy endpoints
  Matrix tau = rng.random_density(2);
  CqState prod{0.5 * tau, 0.5 * tau};
  auto res = dependency_mi_check(prod, 1);
  CHECK(res.pass);
  CHECK(res.mi == doctest::Approx(0.0).epsilon(1e-9));

  CqState copy{0.5 * Vector::Unit(2, 0) * Vector::Unit(2, 0).adjoint(),
               0.5 * Vector::Unit(2, 1) * Vector::Unit(2, 1).adjoint()};
  auto res2 = dependency_mi_check(copy, 1);
  CHECK(res2.pass);
  CHECK(res2.lower == doctest::Approx(0.125));
  CHECK(res2.upper == doctest::Approx(3.0));

  for (int trial = 0; trial < 60; ++trial) {
    int q = 1 + trial % 3;
    CqState s = random_cq(4, 1 << q, rng);
    CHECK(dependency_mi_check(s, q).pass);
  }
}

TEST_CASE("no-classical-memory success bound on small programs") {
  for (int T : {0, 2, 4}) {
    LearningInstance inst(inner_product_matrix(4), 4, 1, 0, T);
    BranchingProgram prog = build_random_guess(inst);
    auto res = quantum_memory_bound_check(inst, prog);
    CHECK(res.pass);
    CHECK(res.success == doctest::Approx(std::exp2(-4)).epsilon(1e-10));
  }
  LearningInstance inst(inner_product_matrix(4), 4, 1, 0, 3);
  auto res = quantum_memory_bound_check(inst, build_prepare_answer(inst));
  CHECK(res.pass);
  auto res2 =
      quantum_memory_bound_check(inst, build_rotate_answer(inst, 0.61));
  CHECK(res2.pass);

  LearningInstance with_m(inner_product_matrix(2), 2, 1, 1, 1);
  CHECK_THROWS(
      quantum_memory_bound_check(with_m, build_random_guess(with_m)));
}
