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

#include "qlml/hybrid_state.hpp"
#include "qlml/rng.hpp"
#include "test_support.hpp"

using namespace qlml;
using qlml::testing::dense_embed;
using qlml::testing::dense_nuclear_norm;
using qlml::testing::random_state;

TEST_CASE("total trace: fresh, zero, and projected states") {
  HybridState fresh = HybridState::maximally_mixed(2, 1, 1);
  CHECK(total_trace(fresh) == doctest::Approx(1.0).epsilon(1e-14));

  HybridState zero(2, 1, 1);
  CHECK(total_trace(zero) == 0.0);

  // removing one of the 2^(q+m) uniform basis directions drops 2^-(q+m)
  PureDirection d(Vector::Unit(2, 0), 0);
  HybridState projected = project_out(fresh, d);
  double expected = 0.0;  // direct block arithmetic: projection acts at w=0
  for (int x = 0; x < fresh.num_x(); ++x)
    for (int w = 0; w < fresh.num_w(); ++w) {
      Matrix p = Matrix::Identity(2, 2) - d.v * d.v.adjoint();
      expected += (w == 0 ? (p * fresh.block(x, w) * p).trace().real()
                          : fresh.block(x, w).trace().real());
    }
  CHECK(total_trace(projected) == doctest::Approx(expected).epsilon(1e-13));
  CHECK(total_trace(projected) ==
        doctest::Approx(1.0 - std::ldexp(1.0, -(1 + 1))).epsilon(1e-13));
}

TEST_CASE("conditional weights") {
  HybridState fresh = HybridState::maximally_mixed(2, 1, 1);
  RngStream rng(7, "cond");
  PureDirection d(rng.haar_unit(2), 1);
  RealVector c = conditional(fresh, d);
  for (int x = 0; x < 4; ++x)
    CHECK(c(x) == doctest::Approx(std::ldexp(1.0, -(2 + 1 + 1))).epsilon(1e-13));

  HybridState zero(2, 1, 1);
  CHECK(conditional(zero, d).maxCoeff() == 0.0);

  // n=1, q=1, m=0 with blocks |0><0|/2 and |1><1|/2 at v = |0>
  HybridState s(1, 0, 1);
  s.set_block(0, 0, 0.5 * Vector::Unit(2, 0) * Vector::Unit(2, 0).adjoint());
  s.set_block(1, 0, 0.5 * Vector::Unit(2, 1) * Vector::Unit(2, 1).adjoint());
  RealVector c2 = conditional(s, PureDirection(Vector::Unit(2, 0), 0));
  CHECK(c2(0) == doctest::Approx(0.5));
  CHECK(c2(1) == doctest::Approx(0.0));

  CHECK_THROWS_AS(conditional(s, PureDirection(Vector::Unit(4, 0), 0)),
                  ShapeError);
}

TEST_CASE("induced distribution and the zero-conditional error") {
  HybridState fresh = HybridState::maximally_mixed(2, 1, 1);
  RngStream rng(8, "ind");
  DistributionX p =
      induced_distribution(fresh, PureDirection(rng.haar_unit(2), 0));
  for (int x = 0; x < 4; ++x) CHECK(p(x) == doctest::Approx(0.25));

  HybridState s(1, 0, 1);
  s.set_block(0, 0, 0.5 * Vector::Unit(2, 0) * Vector::Unit(2, 0).adjoint());
  s.set_block(1, 0, 0.5 * Vector::Unit(2, 1) * Vector::Unit(2, 1).adjoint());
  DistributionX point =
      induced_distribution(s, PureDirection(Vector::Unit(2, 0), 0));
  CHECK(point(0) == doctest::Approx(1.0));
  CHECK(point(1) == doctest::Approx(0.0));

  HybridState zero(1, 0, 1);
  CHECK_THROWS_AS(
      induced_distribution(zero, PureDirection(Vector::Unit(2, 0), 0)),
      ZeroConditionalError);
}

TEST_CASE("marginals") {
  HybridState fresh = HybridState::maximally_mixed(3, 1, 1);
  RealVector mx = marginal_x(fresh);
  for (int x = 0; x < 8; ++x)
    CHECK(mx(x) == doctest::Approx(1.0 / 8).epsilon(1e-13));
  CHECK(mx.sum() == doctest::Approx(1.0));

  Matrix mv = marginal_v(fresh);
  CHECK((mv - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  // dense-route oracle agrees
  CHECK((mv - qlml::testing::dense_marginal_v(fresh)).cwiseAbs().maxCoeff() <
        1e-12);

  // keep={V,W} places a lone block at its w
  HybridState s(1, 1, 1);
  Matrix blk(2, 2);
  blk << 0.3, 0.1, 0.1, 0.2;
  s.set_block(1, 1, blk);
  MarginalResult vw = marginal(s, kRegV | kRegW);
  CHECK((vw.blocks[1] - blk).cwiseAbs().maxCoeff() == 0.0);
  CHECK(vw.blocks[0].cwiseAbs().maxCoeff() == 0.0);

  // keep={X,V} sums over w per concept
  RngStream rng2(19, "marg-xv");
  HybridState r = random_state(2, 1, 1, rng2);
  MarginalResult xv = marginal(r, kRegX | kRegV);
  for (int x = 0; x < 4; ++x)
    CHECK((xv.blocks[x] - (r.block(x, 0) + r.block(x, 1)))
              .cwiseAbs()
              .maxCoeff() < 1e-14);

  // keep={W} is the per-label mass vector
  MarginalResult mw = marginal(r, kRegW);
  CHECK(mw.diag.sum() == doctest::Approx(total_trace(r)));

  CHECK_THROWS_AS(marginal(s, 0), std::invalid_argument);
}

TEST_CASE("project_out: arithmetic, idempotence, orthogonality") {
  HybridState fresh = HybridState::maximally_mixed(2, 1, 1);
  PureDirection d(Vector::Unit(2, 0), 1);
  HybridState once = project_out(fresh, d);
  double c = std::ldexp(1.0, -(2 + 1 + 1));
  Matrix expect = c * (Matrix::Identity(2, 2) -
                       Vector::Unit(2, 0) * Vector::Unit(2, 0).adjoint());
  for (int x = 0; x < 4; ++x) {
    CHECK((once.block(x, 1) - expect).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((once.block(x, 0) - fresh.block(x, 0)).cwiseAbs().maxCoeff() == 0.0);
  }

  HybridState twice = project_out(once, d);
  CHECK(trace_distance(once, twice) < 1e-12);

  CHECK(conditional(once, d).maxCoeff() < 1e-14);
}

TEST_CASE("project_out never increases total trace; decrease matches") {
  RngStream rng(11, "proj");
  for (int trial = 0; trial < 20; ++trial) {
    HybridState s = random_state(2, 1, 1, rng);
    PureDirection d(rng.haar_unit(2), rng.uniform_int(0, 1));
    double removed = conditional(s, d).sum();
    HybridState after = project_out(s, d);
    CHECK(total_trace(after) <= total_trace(s) + 1e-12);
    // trace drop is at least the removed direction's mass (cross terms >= 0)
    CHECK(total_trace(s) - total_trace(after) >= removed - 1e-10);
  }
}

TEST_CASE("trace distance: identity, orthogonal pure states, projection") {
  HybridState a(1, 0, 1), b(1, 0, 1);
  a.set_block(0, 0, Vector::Unit(2, 0) * Vector::Unit(2, 0).adjoint());
  b.set_block(0, 0, Vector::Unit(2, 1) * Vector::Unit(2, 1).adjoint());
  CHECK(trace_distance(a, a) == 0.0);
  CHECK(trace_distance(a, b) == doctest::Approx(2.0));

  HybridState fresh = HybridState::maximally_mixed(2, 1, 1);
  PureDirection d(Vector::Unit(2, 0), 0);
  HybridState proj = project_out(fresh, d);
  // exact eigenvalue computation through the dense route
  double dense = dense_nuclear_norm(dense_embed(fresh) - dense_embed(proj));
  CHECK(trace_distance(fresh, proj) == doctest::Approx(dense).epsilon(1e-12));
  CHECK(trace_distance(fresh, proj) ==
        doctest::Approx(std::ldexp(1.0, -(1 + 1))).epsilon(1e-12));

  HybridState wrong(2, 1, 2);
  CHECK_THROWS_AS(trace_distance(fresh, wrong), ShapeError);
}

TEST_CASE("trace distance triangle inequality on random triples") {
  RngStream rng(12, "tri");
  for (int trial = 0; trial < 25; ++trial) {
    HybridState a = random_state(2, 1, 1, rng);
    HybridState b = random_state(2, 1, 1, rng);
    HybridState c = random_state(2, 1, 1, rng);
    CHECK(trace_distance(a, c) <=
          trace_distance(a, b) + trace_distance(b, c) + 1e-9);
    CHECK(trace_distance(a, b) == doctest::Approx(trace_distance(b, a)));
  }
}

TEST_CASE("fidelity (squared convention)") {
  Matrix pure0 = Vector::Unit(2, 0) * Vector::Unit(2, 0).adjoint();
  Matrix pure1 = Vector::Unit(2, 1) * Vector::Unit(2, 1).adjoint();
  CHECK(fidelity(pure0, pure0) == doctest::Approx(1.0));
  CHECK(fidelity(pure0, pure1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fidelity(0.5 * Matrix::Identity(2, 2), pure0) ==
        doctest::Approx(0.5));

  RngStream rng(13, "fid");
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a = 0.7 * rng.random_density(4);
    Matrix b = 0.9 * rng.random_density(4);
    double f = fidelity(a, b);
    CHECK(f >= -1e-12);
    CHECK(f <= a.trace().real() * b.trace().real() + 1e-9);
  }

  Matrix not_psd = -pure0;
  CHECK_THROWS(fidelity(not_psd, pure0));
}

TEST_CASE("conditioning trace is register-independent") {
  // the conditional trace at (v,w) matches the same quadratic form taken on
  // the V,W marginal (conditioning commutes with dropping X)
  RngStream rng(14, "consist");
  for (int trial = 0; trial < 10; ++trial) {
    HybridState s = random_state(2, 2, 1, rng);
    int w = rng.uniform_int(0, 3);
    PureDirection d(rng.haar_unit(2), w);
    double via_x = conditional(s, d).sum();
    Matrix vw = marginal(s, kRegV | kRegW).blocks[w];
    double via_vw = (d.v.adjoint() * vw * d.v)(0, 0).real();
    CHECK(via_x == doctest::Approx(via_vw).epsilon(1e-11));
  }
}

TEST_CASE("orthonormal basis decomposition of per-w marginals") {
  RngStream rng(15, "basis");
  for (int trial = 0; trial < 10; ++trial) {
    HybridState s = random_state(3, 1, 2, rng);
    int w = rng.uniform_int(0, 1);
    Matrix u = rng.random_unitary(4);
    RealVector sum = RealVector::Zero(s.num_x());
    for (int i = 0; i < 4; ++i)
      sum += conditional(s, PureDirection(u.col(i), w));
    for (int x = 0; x < s.num_x(); ++x)
      CHECK(sum(x) ==
            doctest::Approx(s.block(x, w).trace().real()).epsilon(1e-9));
  }
}

TEST_CASE("per-w distribution is a convex combination over any basis") {
  // feasibility certificate: weights tr[rho_{X|v_i,w}]/tr[rho_{X|w}]
  // reproduce P_{X|w} exactly
  RngStream rng(16, "hull");
  for (int trial = 0; trial < 10; ++trial) {
    int n = 2 + (trial % 3), q = 1 + (trial % 2);
    HybridState s = random_state(n, 1, q, rng);
    int w = rng.uniform_int(0, 1);
    Matrix u = rng.random_unitary(s.dim_v());

    RealVector pw = RealVector::Zero(s.num_x());
    for (int x = 0; x < s.num_x(); ++x)
      pw(x) = s.block(x, w).trace().real();
    double tw = pw.sum();
    REQUIRE(tw > 0);
    pw /= tw;

    RealVector combo = RealVector::Zero(s.num_x());
    double weight_sum = 0.0;
    for (int i = 0; i < s.dim_v(); ++i) {
      RealVector c = conditional(s, PureDirection(u.col(i), w));
      double t = c.sum();
      if (t <= 1e-14) continue;
      double lambda = t / tw;
      CHECK(lambda >= -1e-12);
      weight_sum += lambda;
      combo += lambda * (c / t);
    }
    CHECK(weight_sum == doctest::Approx(1.0).epsilon(1e-10));
    CHECK((combo - pw).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("positivity repair clamps drift and aborts on real violations") {
  Matrix drift(2, 2);
  drift << 1.0, 0.0, 0.0, -1e-11;  // within the clamp window
  Matrix fixed = psd_repair(drift);
  CHECK(min_eigenvalue(fixed) >= 0.0);
  CHECK(std::abs(fixed(0, 0).real() - 1.0) < 1e-12);

  Matrix broken(2, 2);
  broken << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(psd_repair(broken), PsdViolationError);
}

TEST_CASE("state invariants hold for generated states") {
  RngStream rng(17, "valid");
  for (int trial = 0; trial < 5; ++trial) {
    HybridState s = random_state(2, 1, 2, rng);
    StateInvariantReport r = validate_state(s);
    CHECK(r.ok);
    CHECK(r.total_trace == doctest::Approx(1.0).epsilon(1e-10));
  }
}
