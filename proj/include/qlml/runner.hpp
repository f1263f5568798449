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

#include <sstream>

#include "qlml/badness.hpp"
#include "qlml/classical_learner.hpp"
#include "qlml/lemma_lab.hpp"
#include "qlml/program_io.hpp"
#include "qlml/report.hpp"
#include "qlml/run_config.hpp"

namespace qlml {

inline Fraction parse_fraction(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash != std::string::npos)
      return Fraction(std::stoll(s.substr(0, slash)),
                      std::stoll(s.substr(slash + 1)));
    auto dot = s.find('.');
    if (dot == std::string::npos) return Fraction(std::stoll(s));
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    long long den = 1;
    for (std::size_t i = dot + 1; i < s.size(); ++i) den *= 10;
    return Fraction(std::stoll(digits), den);
  } catch (...) {
    throw ConfigError("bad fraction '" + s + "'");
  }
}

inline LearningInstance build_instance(const RunConfig& cfg) {
  if (cfg.matrix == "inner-product")
    return LearningInstance(inner_product_matrix(cfg.n), cfg.n, cfg.q, cfg.m,
                            cfg.T, cfg.tol);
  if (cfg.matrix.rfind("file:", 0) == 0) {
    BiasMatrix m = read_bias_matrix_file(cfg.matrix.substr(5));
    int n = 0;
    while ((1 << n) < m.cols()) ++n;
    if ((1 << n) != m.cols())
      throw ConfigError("config: matrix column count must be a power of two");
    return LearningInstance(std::move(m), n, cfg.q, cfg.m, cfg.T, cfg.tol);
  }
  throw ConfigError("config: unknown matrix spec '" + cfg.matrix + "'");
}

inline BranchingProgram build_program(const RunConfig& cfg,
                                      const LearningInstance& inst) {
  if (!cfg.program_file.empty()) {
    ProgramSpec spec = parse_program_file(cfg.program_file);
    if (spec.q != inst.q || spec.m != inst.m || spec.T != inst.T)
      throw ConfigError("config: program file shape differs from instance");
    return bind_program(spec, inst.n);
  }
  if (cfg.registry == "random-guess") return build_random_guess(inst);
  if (cfg.registry == "decode-one-bit") return build_ip1_optimal(inst);
  if (cfg.registry == "sticky-flag") return build_counter_sticky(inst);
  if (cfg.registry == "prepare-answer") return build_prepare_answer(inst);
  if (cfg.registry == "rotate-answer")
    return build_rotate_answer(inst, cfg.angle);
  throw ConfigError("config: unknown program registry '" + cfg.registry + "'");
}

// A deterministic target distribution with L2 norm 1.5 * 2^l 2^(-n/2):
// a convex mix of uniform and a point mass, solved for by bisection.
inline DistributionX make_target(int n, double l) {
  const int nx = 1 << n;
  double edge = std::exp2(l - n / 2.0);
  if (edge > 1.0)
    throw ConfigError("target: norm window exceeds a point mass; lower l");
  double want = std::min(1.5 * edge, 1.0);
  auto norm_at = [&](double g) {
    double base = (1.0 - g) / nx;
    double head = base + g;
    return std::sqrt((nx - 1) * base * base + head * head);
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (norm_at(mid) < want ? lo : hi) = mid;
  }
  double g = 0.5 * (lo + hi);
  RealVector p = RealVector::Constant(nx, (1.0 - g) / nx);
  p(0) += g;
  return DistributionX(p);
}

inline SearchBudget budget_from(const RunConfig& cfg) {
  SearchBudget b;
  b.restarts = std::max(cfg.budget, 8);
  b.pick_restarts = std::max(cfg.budget / 8, 8);
  b.grid_points = std::max(cfg.budget * 10, 400);
  return b;
}

inline void run_simulate(const RunConfig& cfg, ReportWriter& report) {
  LearningInstance inst = build_instance(cfg);
  BranchingProgram prog = build_program(cfg, inst);
  HybridState s = init_state(inst);
  for (int t = 0; t <= inst.T; ++t) {
    Record rec;
    rec["record"] = "stage";
    rec["t"] = t;
    rec["trace"] = total_trace(s);
    rec["success"] = success_probability(s, prog);
    report.add(std::move(rec));
    if (t < inst.T) s = evolve_step(s, t, prog, inst.M);
  }
}

inline void run_truncate(const RunConfig& cfg, ReportWriter& report) {
  LearningInstance inst = build_instance(cfg);
  BranchingProgram prog = build_program(cfg, inst);
  PipelineParams pp{.l = cfg.l, .r = cfg.r, .n = inst.n};
  SearchBudget budget = budget_from(cfg);

  bool params_ok = false;
  if (cfg.enforce_params) {
    if (cfg.kp.empty() || cfg.lp.empty() || cfg.rp.empty())
      throw ConfigError("config: enforce_params needs kp, lp, rp");
    ParameterSet ps;
    ps.n = inst.n;
    ps.q = inst.q;
    ps.m = inst.m;
    ps.T = inst.T;
    ps.kp = parse_fraction(cfg.kp);
    ps.lp = parse_fraction(cfg.lp);
    ps.rp = parse_fraction(cfg.rp);
    if (!parameter_check_all(ps))
      throw ConfigError("config: parameter feasibility check failed");
    params_ok = true;
  }

  // every no-violation claim below is relative to this search budget
  {
    Record r;
    r["record"] = "search-budget";
    r["grid_points"] = budget.grid_points;
    r["restarts"] = budget.restarts;
    r["iters"] = budget.iters;
    r["pick_restarts"] = budget.pick_restarts;
    report.add(std::move(r));
  }

  auto emit_stages = [&](const std::vector<PipelineResult>& stages) {
    for (const auto& stage : stages)
      for (const auto& rec : stage.records) {
        Record r;
        r["record"] = "truncation";
        r["t"] = rec.t;
        r["stage"] = rec.stage;
        r["removed"] = rec.removed_count;
        r["removed_weights"] = rec.removed_weights;
        r["distance"] = rec.distance;
        r["bound"] = rec.bound;
        r["pass"] = rec.pass;
        report.add(std::move(r));
      }
  };

  if (cfg.track_badness) {
    double tl = cfg.target_l < 0 ? cfg.l : cfg.target_l;
    TargetDistribution target(make_target(inst.n, tl), tl, inst.n);
    BadnessParams bp{.l = cfg.l, .r = cfg.r, .n = inst.n};
    bp.grid_points = budget.grid_points;
    auto run = run_with_badness(inst, prog, pp, target, budget, bp);
    emit_stages(run.stages);
    for (std::size_t t = 0; t < run.detections.size(); ++t)
      for (std::size_t a = 0; a < run.detections[t].size(); ++a)
        for (std::size_t w = 0; w < run.detections[t][a].size(); ++w) {
          const BadDetection& det = run.detections[t][a][w];
          if (det.verdict == BadVerdict::kNotBad) continue;
          Record r;
          r["record"] = "badness";
          r["t"] = static_cast<int>(t);
          r["w"] = static_cast<int>(w);
          r["a"] = static_cast<int>(a);
          r["verdict_kind"] =
              det.verdict == BadVerdict::kBad ? "bad" : "undecided";
          r["witness_norm"] = det.witness ? det.witness->norm() : 0.0;
          r["spectral_margin"] = det.spectral_margin;
          r["search_margin"] = det.search_margin;
          if (!det.note.empty()) r["note"] = det.note;
          report.add(std::move(r));
        }
    auto ip = verify_ipbound(run, target, cfg.r);
    Record r1;
    r1["record"] = "check";
    r1["name"] = "progress-bound";
    r1["worst_margin"] = ip.worst_margin;
    r1["verdict"] = ip.ok ? "PASS" : "FAIL";
    report.add(std::move(r1));
    auto wr = verify_badness_weight(run, run.p_hat);
    Record r2;
    r2["record"] = "check";
    r2["name"] = "weight-recurrence";
    r2["p_hat"] = run.p_hat;
    r2["worst_gap"] = wr.worst_gap;
    r2["verdict"] = wr.ok ? "PASS" : "FAIL";
    report.add(std::move(r2));
    Record r3;
    r3["record"] = "check";
    r3["name"] = "register-consistency";
    r3["gap"] = run.max_consistency_gap;
    r3["verdict"] = run.max_consistency_gap <= 1e-9 ? "PASS" : "FAIL";
    report.add(std::move(r3));
  } else {
    auto run = run_truncated(inst, prog, pp, budget);
    emit_stages(run.stages);
    auto checks = truncation_error_report(run, pp, inst.q, inst.m, params_ok);
    for (const auto& check : checks) {
      Record r;
      r["record"] = "check";
      r["name"] = check.name;
      r["measured"] = check.measured;
      r["bound"] = check.bound;
      if (check.informational) {
        r["informational"] = true;
        r["pass"] = check.pass;
      } else {
        r["verdict"] = check.pass ? "PASS" : "FAIL";
      }
      report.add(std::move(r));
    }
  }
}

// ------------------------------------------------------------------
// Lemma verifiers (CLI-reachable, one record each)
// ------------------------------------------------------------------

inline Record verify_anticoncentration(int d, double eps,
                                       std::int64_t samples,
                                       std::uint64_t seed, double c = 10.0) {
  RngStream rng(seed, "anticc-sigma");
  Matrix sigma = hermitize(rng.gaussian_matrix(d, d));
  auto res = anticoncentration_estimate(sigma, eps, samples, seed, c);
  Record r;
  r["record"] = "verify";
  r["lemma"] = "anticoncentration";
  r["params"] = {{"d", d}, {"eps", eps}, {"samples", samples}, {"c", c}};
  r["measured"] = res.empirical;
  r["bound"] = res.bound;
  r["margin"] = res.bound - res.empirical;
  r["verdict"] = res.empirical <= res.bound ? "PASS" : "FAIL";
  r["seed"] = seed;
  return r;
}

inline Record verify_projection_weight(int trials, int dmax,
                                       std::uint64_t seed) {
  RngStream rng(seed, "pdw-suite");
  int violations = 0;
  double worst = -1e300;
  for (int i = 0; i < trials; ++i) {
    int d = 2 + rng.uniform_int(0, dmax - 2);
    Matrix rho = rng.uniform() * rng.random_density(d);
    int rank = 1 + rng.uniform_int(0, d - 1);
    Matrix u = rng.random_unitary(d);
    Matrix proj = Matrix::Zero(d, d);
    for (int j = 0; j < rank; ++j) proj += u.col(j) * u.col(j).adjoint();
    auto res = projection_distance_weight_check(rho, proj);
    worst = std::max(worst, res.lhs - res.rhs);
    if (!res.pass) ++violations;
  }
  Record r;
  r["record"] = "verify";
  r["lemma"] = "projection-weight";
  r["params"] = {{"trials", trials}, {"dmax", dmax}};
  r["measured"] = violations;
  r["bound"] = 0;
  r["margin"] = -worst;
  r["verdict"] = violations == 0 ? "PASS" : "FAIL";
  r["seed"] = seed;
  return r;
}

inline Record verify_fidelity_distance(int trials, int dmax,
                                       std::uint64_t seed) {
  RngStream rng(seed, "fvdg-suite");
  int violations = 0;
  for (int i = 0; i < trials; ++i) {
    int d = 2 + rng.uniform_int(0, dmax - 2);
    Matrix rho = rng.uniform() * rng.random_density(d);
    Matrix sig = rng.uniform() * rng.random_density(d);
    if (rho.trace().real() < sig.trace().real()) std::swap(rho, sig);
    if (!fvdg_variant_check(rho, sig).pass) ++violations;
  }
  Record r;
  r["record"] = "verify";
  r["lemma"] = "fidelity-distance";
  r["params"] = {{"trials", trials}, {"dmax", dmax}};
  r["measured"] = violations;
  r["bound"] = 0;
  r["margin"] = violations == 0 ? 1 : -violations;
  r["verdict"] = violations == 0 ? "PASS" : "FAIL";
  r["seed"] = seed;
  return r;
}

inline Record verify_dependency_mi(int trials, int qmax, std::uint64_t seed) {
  RngStream rng(seed, "depmi-suite");
  int violations = 0;
  for (int i = 0; i < trials; ++i) {
    int q = 1 + rng.uniform_int(0, qmax - 1);
    int nx = 1 << (1 + rng.uniform_int(0, 2));
    CqState s;
    double total = 0.0;
    std::vector<double> weights(nx);
    for (auto& w : weights) {
      w = -std::log(1.0 - rng.uniform() + 1e-300);
      total += w;
    }
    for (int x = 0; x < nx; ++x)
      s.push_back((weights[x] / total) * rng.random_density(1 << q));
    if (!dependency_mi_check(s, q).pass) ++violations;
  }
  Record r;
  r["record"] = "verify";
  r["lemma"] = "dependency-mi";
  r["params"] = {{"trials", trials}, {"qmax", qmax}};
  r["measured"] = violations;
  r["bound"] = 0;
  r["margin"] = violations == 0 ? 1 : -violations;
  r["verdict"] = violations == 0 ? "PASS" : "FAIL";
  r["seed"] = seed;
  return r;
}

inline Record verify_memory_bound(int n, int q, int T,
                                  const std::string& program, double angle,
                                  std::uint64_t seed) {
  LearningInstance inst(inner_product_matrix(n), n, q, 0, T);
  BranchingProgram prog =
      program == "prepare-answer" ? build_prepare_answer(inst)
      : program == "rotate-answer" ? build_rotate_answer(inst, angle)
                                   : build_random_guess(inst);
  auto res = quantum_memory_bound_check(inst, prog);
  Record r;
  r["record"] = "verify";
  r["lemma"] = "memory-bound";
  r["params"] = {{"n", n}, {"q", q}, {"T", T}, {"program", program}};
  r["measured"] = res.success;
  r["bound"] = res.bound;
  r["margin"] = res.bound - res.success;
  r["r_hat"] = res.r_hat;
  r["verdict"] = res.pass ? "PASS" : "FAIL";
  r["seed"] = seed;
  return r;
}

inline std::vector<Record> verify_params(const ParameterSet& ps) {
  std::vector<Record> out;
  for (const auto& res : parameter_check(ps)) {
    Record r;
    r["record"] = "param-check";
    r["name"] = res.name;
    r["detail"] = res.detail;
    r["verdict"] = res.pass ? "PASS" : "FAIL";
    out.push_back(std::move(r));
  }
  return out;
}

// The full battery, used by mode=verify and the determinism check.
inline void run_verify(const RunConfig& cfg, ReportWriter& report) {
  std::int64_t samples = std::max<std::int64_t>(cfg.samples / 10, 1000);
  for (double eps : {1e-3, 1e-2, 0.04})
    report.add(verify_anticoncentration(8, eps, samples, cfg.seed));
  report.add(verify_projection_weight(200, 12, cfg.seed));
  report.add(verify_fidelity_distance(200, 8, cfg.seed));
  report.add(verify_dependency_mi(100, 3, cfg.seed));
  report.add(verify_memory_bound(4, 1, 3, "prepare-answer", cfg.angle,
                                 cfg.seed));
  ParameterSet ps;
  ps.n = 260;
  ps.kp = 101;
  ps.lp = 260;
  ps.rp = 40;
  ps.q = 3;
  ps.m = 590;
  ps.T = 256;
  for (auto& r : verify_params(ps)) report.add(std::move(r));
}

// Dispatch; throws ConfigError / ParseError for malformed input (exit 2),
// returns 1 when any enabled check failed, 0 otherwise.
inline int run(const RunConfig& cfg, ReportWriter& report) {
  if (cfg.mode == "simulate")
    run_simulate(cfg, report);
  else if (cfg.mode == "truncate")
    run_truncate(cfg, report);
  else
    run_verify(cfg, report);
  if (!cfg.out.empty()) report.write_atomic(cfg.out);
  return report.fail_count() > 0 ? 1 : 0;
}

}  // namespace qlml
