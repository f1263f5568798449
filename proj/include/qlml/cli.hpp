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

#include <iostream>

#include <CLI11.hpp>

#include "qlml/runner.hpp"

namespace qlml {

// Exit codes: 0 all enabled checks pass, 1 a check failed, 2 bad usage or
// malformed configuration / input files.
inline int cli_main(int argc, char** argv) {
  CLI::App app{"exact simulator and verification lab for hybrid-memory "
               "branching programs on matrix learning problems"};
  app.require_subcommand(1);

  std::string config_path, out_path, matrix_path;
  std::uint64_t seed = 1;
  bool seed_set = false, out_set = false;
  std::int64_t samples = 100000;
  int budget = 1000;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "run seed")->each([&](std::string) {
      seed_set = true;
    });
    cmd->add_option("--out", out_path, "report path")->each([&](std::string) {
      out_set = true;
    });
  };

  auto* sim = app.add_subcommand("simulate", "exact program run");
  sim->add_option("--config", config_path, "config file")->required();
  add_common(sim);

  auto* trunc = app.add_subcommand("truncate", "truncated run with reports");
  trunc->add_option("--config", config_path, "config file")->required();
  trunc->add_option("--budget", budget, "search budget scale");
  add_common(trunc);

  auto* verify = app.add_subcommand("verify", "full verifier battery");
  verify->add_option("--config", config_path, "config file");
  verify->add_option("--samples", samples, "sample count");
  add_common(verify);

  auto* vl = app.add_subcommand("verify-lemma", "run one named verifier");
  std::string lemma;
  int d = 8, trials = 1000, dmax = 16, qmax = 3, vl_n = 4, vl_q = 1, vl_t = 3;
  double eps = 0.01, cal_c = 10.0, angle = 0.61;
  std::string vl_program = "prepare-answer";
  vl->add_option("name", lemma,
                 "anticoncentration | projection-weight | fidelity-distance "
                 "| dependency-mi | memory-bound | all")
      ->required();
  vl->add_option("--d", d, "dimension");
  vl->add_option("--eps", eps, "anti-concentration window");
  vl->add_option("--samples", samples, "Monte-Carlo samples");
  vl->add_option("--trials", trials, "random instances");
  vl->add_option("--dmax", dmax, "max dimension");
  vl->add_option("--qmax", qmax, "max qubits");
  vl->add_option("--c", cal_c, "calibration constant");
  vl->add_option("--n", vl_n, "concept bits");
  vl->add_option("--q", vl_q, "memory qubits");
  vl->add_option("--T", vl_t, "program length");
  vl->add_option("--program", vl_program, "zoo program name");
  vl->add_option("--angle", angle, "rotation angle for rotate-answer");
  add_common(vl);

  auto* scan = app.add_subcommand("extractor-scan", "submatrix bias scan");
  double scan_k = 0.0, scan_l = 0.0;
  std::int64_t scan_samples = 0;
  scan->add_option("--matrix", matrix_path, "matrix file")->required();
  scan->add_option("--k", scan_k, "row exponent")->required();
  scan->add_option("--l", scan_l, "column exponent")->required();
  scan->add_option("--samples", scan_samples,
                   "randomized mode sample count (0 = exhaustive)");
  add_common(scan);

  auto* pc = app.add_subcommand("params-check", "parameter feasibility");
  std::string pc_n, pc_kp, pc_lp, pc_rp, pc_q, pc_m, pc_t;
  pc->add_option("--n", pc_n)->required();
  pc->add_option("--kp", pc_kp)->required();
  pc->add_option("--lp", pc_lp)->required();
  pc->add_option("--rp", pc_rp)->required();
  pc->add_option("--q", pc_q)->required();
  pc->add_option("--m", pc_m)->required();
  pc->add_option("--T", pc_t)->required();
  add_common(pc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ReportWriter report;
    if (sim->parsed() || trunc->parsed() || verify->parsed()) {
      RunConfig cfg;
      if (!config_path.empty()) cfg = parse_run_config_file(config_path);
      cfg.mode = sim->parsed() ? "simulate"
                 : trunc->parsed() ? "truncate"
                                   : "verify";
      if (seed_set) cfg.seed = seed;
      if (out_set) cfg.out = out_path;
      if (verify->parsed() && samples > 0) cfg.samples = samples;
      if (trunc->parsed() && budget > 0) cfg.budget = budget;
      int code = run(cfg, report);
      std::cout << report.to_string();
      return code;
    }
    if (vl->parsed()) {
      if (lemma == "anticoncentration") {
        report.add(verify_anticoncentration(d, eps, samples, seed, cal_c));
      } else if (lemma == "projection-weight") {
        report.add(verify_projection_weight(trials, dmax, seed));
      } else if (lemma == "fidelity-distance") {
        report.add(verify_fidelity_distance(trials, dmax, seed));
      } else if (lemma == "dependency-mi") {
        report.add(verify_dependency_mi(trials, qmax, seed));
      } else if (lemma == "memory-bound") {
        report.add(
            verify_memory_bound(vl_n, vl_q, vl_t, vl_program, angle, seed));
      } else if (lemma == "all") {
        RunConfig cfg;
        cfg.seed = seed;
        cfg.samples = samples;
        run_verify(cfg, report);
      } else {
        std::cerr << "unknown lemma '" << lemma << "'\n";
        return 2;
      }
      if (out_set) report.write_atomic(out_path);
      std::cout << report.to_string();
      return report.fail_count() > 0 ? 1 : 0;
    }
    if (scan->parsed()) {
      BiasMatrix m = read_bias_matrix_file(matrix_path);
      BiasScanOptions opt;
      opt.samples = scan_samples;
      opt.seed = seed;
      double bias = submatrix_bias_scan(m, scan_k, scan_l, opt);
      Record r;
      r["record"] = "extractor-scan";
      r["rows"] = m.rows();
      r["cols"] = m.cols();
      r["k"] = scan_k;
      r["l"] = scan_l;
      r["bias"] = bias;
      r["mode"] = scan_samples > 0 ? "randomized" : "exhaustive";
      if (scan_samples > 0) r["samples"] = scan_samples;
      report.add(std::move(r));
      if (out_set) report.write_atomic(out_path);
      std::cout << report.to_string();
      return 0;
    }
    if (pc->parsed()) {
      ParameterSet ps;
      ps.n = parse_fraction(pc_n);
      ps.kp = parse_fraction(pc_kp);
      ps.lp = parse_fraction(pc_lp);
      ps.rp = parse_fraction(pc_rp);
      ps.q = parse_fraction(pc_q);
      ps.m = parse_fraction(pc_m);
      ps.T = parse_fraction(pc_t);
      for (auto& r : verify_params(ps)) report.add(std::move(r));
      if (out_set) report.write_atomic(out_path);
      std::cout << report.to_string();
      return report.fail_count() > 0 ? 1 : 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace qlml
