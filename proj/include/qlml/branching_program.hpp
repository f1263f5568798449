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

#include <functional>
#include <memory>
#include <vector>

#include "qlml/bias_matrix.hpp"
#include "qlml/kraus_channel.hpp"

namespace qlml {

struct LearningInstance {
  BiasMatrix M;
  int n;  // 2^n concepts = columns of M
  int q;  // qubits of quantum memory
  int m;  // bits of classical memory
  int T;  // program length
  double tol;

  LearningInstance(BiasMatrix M_, int n_, int q_, int m_, int T_,
                   double tol_ = kDefaultTol)
      : M(std::move(M_)), n(n_), q(q_), m(m_), T(T_), tol(tol_) {
    if (M.cols() != (1 << n)) throw ShapeError("instance: |X| != 2^n");
    if (q < 0 || m < 0 || T < 0)
      throw std::invalid_argument("instance: negative parameter");
  }
};

using ChannelPtr = std::shared_ptr<const KrausChannel>;

// Resolves (t, a, b) to a channel. Rules may use wildcards on any of the
// three keys; the most specific match wins, with later rules breaking ties.
// A schedule whose effective channel never depends on a enables the closed
// form over b alone (|A|-fold cheaper evolution).
class ChannelSchedule {
 public:
  struct Rule {
    int t = -1;  // -1 = any
    int a = -1;
    int b = 0;   // +1 / -1 / 0 = any
    ChannelPtr channel;
  };

  void add(int t, int a, int b, ChannelPtr c) {
    rules_.push_back(Rule{t, a, b, std::move(c)});
  }

  const KrausChannel& at(int t, int a, int b) const {
    const Rule* best = nullptr;
    int best_score = -1;
    for (const Rule& r : rules_) {
      if (r.t >= 0 && r.t != t) continue;
      if (r.a >= 0 && r.a != a) continue;
      if (r.b != 0 && r.b != b) continue;
      int score = (r.t >= 0) + (r.a >= 0) + (r.b != 0);
      if (score >= best_score) {
        best_score = score;
        best = &r;
      }
    }
    if (!best) throw ConfigError("schedule: no channel for (t,a,b)");
    return *best->channel;
  }

  bool a_uniform() const {
    for (const Rule& r : rules_)
      if (r.a >= 0) return false;
    return true;
  }

  const std::vector<Rule>& rules() const { return rules_; }

 private:
  std::vector<Rule> rules_;
};

// Final guess x~(v, w) from the measured memory. Total on its domain.
class OutputMap {
 public:
  OutputMap() = default;
  OutputMap(int q, int m, int fill = 0)
      : q_(q), m_(m),
        guess_(std::size_t(1) << (q + m), fill) {}

  int q() const { return q_; }
  int m() const { return m_; }

  int operator()(int v, int w) const {
    return guess_[(static_cast<std::size_t>(w) << q_) | v];
  }

  void set(int v, int w, int x) {
    guess_[(static_cast<std::size_t>(w) << q_) | v] = x;
  }

 private:
  int q_ = 0, m_ = 0;
  std::vector<int> guess_;
};

struct BranchingProgram {
  int q = 0, m = 0, T = 0;
  ChannelSchedule schedule;
  OutputMap output;
};

inline HybridState init_state(const LearningInstance& inst) {
  return HybridState::maximally_mixed(inst.n, inst.m, inst.q, inst.tol);
}

namespace detail {

inline void validate_or_throw(const KrausChannel& c, double tol) {
  if (c.validated()) return;
  if (auto v = validate_channel(c, tol))
    throw std::invalid_argument("channel validation failure: " + v->what +
                                " at w=" + std::to_string(v->w_in) +
                                " magnitude " + std::to_string(v->magnitude));
  c.mark_validated();
}

}  // namespace detail

// One exact evolution step: the expectation over a uniform sample row a of
// applying the scheduled channel, with the answer bit b = M(a,x) controlling
// the channel choice per concept x. No sampling is involved; the result is
// the exact averaged system.
//
// per_a_input, when non-null, supplies a distinct input state for each a
// (all sharing the shape of s); this is the form the truncated evolution
// needs. Plain evolution passes null and uses s for every a.
inline HybridState evolve_step(
    const HybridState& s, int t, const BranchingProgram& prog,
    const BiasMatrix& M,
    const std::vector<HybridState>* per_a_input = nullptr) {
  const int na = M.rows();
  const int dv = s.dim_v();
  HybridState out(s.n(), s.m(), s.q(), s.tol());
  std::vector<Matrix> acc(static_cast<std::size_t>(s.num_x()) * s.num_w(),
                          Matrix::Zero(dv, dv));
  auto acc_at = [&](int x, int w) -> Matrix& {
    return acc[static_cast<std::size_t>(x) * s.num_w() + w];
  };

  const bool fast = prog.schedule.a_uniform() && per_a_input == nullptr;
  if (fast) {
    const KrausChannel& plus = prog.schedule.at(t, 0, +1);
    const KrausChannel& minus = prog.schedule.at(t, 0, -1);
    detail::validate_or_throw(plus, s.tol());
    detail::validate_or_throw(minus, s.tol());
    std::vector<int> plus_counts = M.plus_counts();
    for (int x = 0; x < s.num_x(); ++x) {
      double p_plus = static_cast<double>(plus_counts[x]) / na;
      for (int w = 0; w < s.num_w(); ++w) {
        const Matrix& blk = s.block(x, w);
        if (blk.cwiseAbs().maxCoeff() == 0.0) continue;
        if (p_plus > 0) {
          auto res = plus.apply(blk, w);
          for (int wo = 0; wo < s.num_w(); ++wo)
            acc_at(x, wo) += p_plus * res[wo];
        }
        if (p_plus < 1) {
          auto res = minus.apply(blk, w);
          for (int wo = 0; wo < s.num_w(); ++wo)
            acc_at(x, wo) += (1.0 - p_plus) * res[wo];
        }
      }
    }
  } else {
    const double inv_na = 1.0 / na;
    for (int a = 0; a < na; ++a) {
      const HybridState& in = per_a_input ? (*per_a_input)[a] : s;
      for (int x = 0; x < s.num_x(); ++x) {
        const int b = M(a, x);
        const KrausChannel& chan = prog.schedule.at(t, a, b);
        detail::validate_or_throw(chan, s.tol());
        for (int w = 0; w < s.num_w(); ++w) {
          const Matrix& blk = in.block(x, w);
          if (blk.cwiseAbs().maxCoeff() == 0.0) continue;
          auto res = chan.apply(blk, w);
          for (int wo = 0; wo < s.num_w(); ++wo)
            acc_at(x, wo) += inv_na * res[wo];
        }
      }
    }
  }

  for (int x = 0; x < s.num_x(); ++x)
    for (int w = 0; w < s.num_w(); ++w) {
      Matrix& b = acc_at(x, w);
      if (b.cwiseAbs().maxCoeff() == 0.0) {
        out.set_block_zero(x, w);
      } else {
        out.set_block(x, w, psd_repair(b));
      }
    }
  return out;
}

// Probability that the computational-basis measurement of the final memory
// yields (v, w) with x~(v,w) equal to the true concept.
inline double success_probability(const HybridState& s,
                                  const BranchingProgram& prog) {
  double p = 0.0;
  for (int w = 0; w < s.num_w(); ++w)
    for (int v = 0; v < s.dim_v(); ++v) {
      int guess = prog.output(v, w);
      p += s.block(guess, w)(v, v).real();
    }
  return p;
}

// Runs the program exactly from the fully mixed start; returns the state at
// every stage t = 0..T.
inline std::vector<HybridState> run_program(const LearningInstance& inst,
                                            const BranchingProgram& prog) {
  std::vector<HybridState> stages;
  stages.push_back(init_state(inst));
  for (int t = 0; t < inst.T; ++t)
    stages.push_back(evolve_step(stages.back(), t, prog, inst.M));
  return stages;
}

// ------------------------------------------------------------------
// Program zoo
// ------------------------------------------------------------------

// Identity channels, constant guess: success is exactly 2^-n.
inline BranchingProgram build_random_guess(const LearningInstance& inst) {
  BranchingProgram p;
  p.q = inst.q;
  p.m = inst.m;
  p.T = inst.T;
  p.schedule.add(-1, -1, 0,
                 std::make_shared<KrausChannel>(identity_channel(inst.q,
                                                                 inst.m)));
  p.output = OutputMap(inst.q, inst.m, 0);
  return p;
}

// One-sample learner for the 1-bit inner-product problem: on a = 1 decode
// x from the answer bit (b = +1 means x = 0), on a = 0 learn nothing and
// guess 0. Succeeds with probability 3/4. Needs q = 0, m = 1, T = 1.
inline BranchingProgram build_ip1_optimal(const LearningInstance& inst) {
  if (inst.n != 1 || inst.m != 1 || inst.T != 1)
    throw std::invalid_argument("build_ip1_optimal: needs n=1, m=1, T=1");
  BranchingProgram p;
  p.q = inst.q;
  p.m = 1;
  p.T = 1;
  auto id = std::make_shared<KrausChannel>(identity_channel(inst.q, 1));
  auto w_set0 = std::make_shared<KrausChannel>(
      classical_table_channel(inst.q, 1, {0, 0}));
  auto w_set1 = std::make_shared<KrausChannel>(
      classical_table_channel(inst.q, 1, {1, 1}));
  p.schedule.add(-1, 0, 0, id);       // a = 0: uninformative
  p.schedule.add(-1, 1, +1, w_set0);  // a = 1, b = +1: x = 0
  p.schedule.add(-1, 1, -1, w_set1);  // a = 1, b = -1: x = 1
  p.output = OutputMap(inst.q, 1);
  for (int v = 0; v < (1 << inst.q); ++v) {
    p.output.set(v, 0, 0);
    p.output.set(v, 1, 1);
  }
  return p;
}

// Sticky 1-bit flag for n = 1: w latches to 1 once a sample (a=1, b=-1)
// reveals x = 1.
inline BranchingProgram build_counter_sticky(const LearningInstance& inst) {
  if (inst.n != 1 || inst.m != 1)
    throw std::invalid_argument("build_counter_sticky: needs n=1, m=1");
  BranchingProgram p;
  p.q = inst.q;
  p.m = 1;
  p.T = inst.T;
  auto id = std::make_shared<KrausChannel>(identity_channel(inst.q, 1));
  auto latch = std::make_shared<KrausChannel>(
      classical_table_channel(inst.q, 1, {1, 1}));
  p.schedule.add(-1, -1, 0, id);
  p.schedule.add(-1, 1, -1, latch);
  p.output = OutputMap(inst.q, 1);
  for (int v = 0; v < (1 << inst.q); ++v) {
    p.output.set(v, 0, 0);
    p.output.set(v, 1, 1);
  }
  return p;
}

// Quantum-only memory (m = 0): each sample re-prepares the qubit to |0> or
// |1> according to the answer bit; the final guess echoes the measured bit
// into the low concept bit.
inline BranchingProgram build_prepare_answer(const LearningInstance& inst) {
  if (inst.q < 1 || inst.m != 0)
    throw std::invalid_argument("build_prepare_answer: needs q>=1, m=0");
  BranchingProgram p;
  p.q = inst.q;
  p.m = 0;
  p.T = inst.T;
  const int dv = 1 << inst.q;
  std::vector<Vector> prep_plus{Vector::Unit(dv, 0)};
  std::vector<Vector> prep_minus{Vector::Unit(dv, 1 % dv)};
  auto plus = std::make_shared<KrausChannel>(
      measure_prepare_channel(inst.q, 0, prep_plus, {}));
  auto minus = std::make_shared<KrausChannel>(
      measure_prepare_channel(inst.q, 0, prep_minus, {}));
  p.schedule.add(-1, -1, +1, plus);
  p.schedule.add(-1, -1, -1, minus);
  p.output = OutputMap(inst.q, 0);
  for (int v = 0; v < dv; ++v) p.output.set(v, 0, v & ((1 << inst.n) - 1));
  return p;
}

// Quantum-only memory: rotates the qubit by a fixed angle whose sign follows
// the answer bit, then guesses from the measured basis state.
inline BranchingProgram build_rotate_answer(const LearningInstance& inst,
                                            double angle = 0.61) {
  if (inst.q != 1 || inst.m != 0)
    throw std::invalid_argument("build_rotate_answer: needs q=1, m=0");
  BranchingProgram p;
  p.q = 1;
  p.m = 0;
  p.T = inst.T;
  auto rot = [&](double th) {
    Matrix u(2, 2);
    u << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    return std::make_shared<KrausChannel>(unitary_channel(1, 0, u, {}));
  };
  p.schedule.add(-1, -1, +1, rot(angle));
  p.schedule.add(-1, -1, -1, rot(-angle));
  p.output = OutputMap(1, 0);
  p.output.set(0, 0, 0);
  p.output.set(1, 0, (1 << inst.n) - 1);
  return p;
}

}  // namespace qlml
