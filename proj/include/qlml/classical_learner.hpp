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

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "qlml/bias_matrix.hpp"
#include "qlml/rng.hpp"

namespace qlml {

// Classical baseline learners for the inner-product problem. These run on a
// dedicated classical fast path: the distribution over reachable classical
// memory states is tracked directly (sparsely, via its sufficient statistic
// where one exists) instead of being encoded as 2^m-dimensional channels,
// which would be infeasible for the memory sizes these learners need.

enum class LearnerKind { kGaussElim, kMajority, kCounter };

struct LearnerResult {
  double success = 0.0;
  std::string mode;        // "exact" or "mc"
  std::int64_t trials = 0; // mc mode only
  double std_error = 0.0;  // mc mode only
};

// Probability that T uniform vectors from F_2^n span the whole space,
// estimated by Monte-Carlo rank trials. Independent of the learner code
// paths: plain bitset elimination, nothing shared.
inline double rank_span_oracle(int n, int T, std::int64_t trials,
                               std::uint64_t seed) {
  RngStream rng(seed, "rank-oracle");
  std::int64_t full = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    std::array<std::uint32_t, 32> basis{};  // basis[i] has top bit i
    int rank = 0;
    for (int s = 0; s < T && rank < n; ++s) {
      std::uint32_t v =
          static_cast<std::uint32_t>(rng.engine()()) & ((1u << n) - 1u);
      for (int i = n - 1; i >= 0; --i) {
        if (!(v >> i & 1u)) continue;
        if (!basis[i]) {
          basis[i] = v;
          ++rank;
          break;
        }
        v ^= basis[i];
      }
    }
    if (rank == n) ++full;
  }
  return static_cast<double>(full) / trials;
}

// Closed form Pr[T uniform vectors span F_2^n] = prod_{i=0}^{n-1}(1-2^{i-T}).
inline double span_probability_closed_form(int n, int T) {
  double p = 1.0;
  for (int i = 0; i < n; ++i) p *= 1.0 - std::ldexp(1.0, i - T);
  return p;
}

namespace detail {

// Exact success of the elimination learner via the rank Markov chain: from
// rank j the next sample stays in the span with probability 2^(j-n). The
// guess among the 2^(n-rank) consistent candidates is correct with
// probability 2^(rank-n) averaged over the uniform concept.
inline double gauss_elim_exact(int n, int T) {
  std::vector<double> pr(n + 1, 0.0);
  pr[0] = 1.0;
  for (int t = 0; t < T; ++t) {
    std::vector<double> next(n + 1, 0.0);
    for (int j = 0; j <= n; ++j) {
      if (pr[j] == 0.0) continue;
      double stay = std::ldexp(1.0, j - n);
      next[j] += pr[j] * stay;
      if (j < n) next[j + 1] += pr[j] * (1.0 - stay);
    }
    pr.swap(next);
  }
  double success = 0.0;
  for (int j = 0; j <= n; ++j) success += pr[j] * std::ldexp(1.0, j - n);
  return success;
}

// Trajectory Monte-Carlo over full echelon systems with uniform guessing
// among consistent candidates.
inline LearnerResult gauss_elim_mc(int n, int T, std::int64_t trials,
                                   std::uint64_t seed) {
  RngStream rng(seed, "gauss-elim-mc");
  std::int64_t hits = 0;
  const std::uint32_t mask = (1u << n) - 1u;
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    std::uint32_t x = static_cast<std::uint32_t>(rng.engine()()) & mask;
    std::array<std::uint32_t, 32> rows{};  // rows[i] = [a | rhs<<n], pivot i
    for (int t = 0; t < T; ++t) {
      std::uint32_t a = static_cast<std::uint32_t>(rng.engine()()) & mask;
      std::uint32_t rhs = static_cast<std::uint32_t>(std::popcount(a & x) & 1);
      std::uint32_t row = a | (rhs << n);
      for (int i = n - 1; i >= 0; --i) {
        if (!(row >> i & 1u)) continue;
        if (!(rows[i] & mask)) {
          rows[i] = row;
          break;
        }
        row ^= rows[i];
      }
    }
    // free bits drawn uniformly, then fix pivot bits from low to high;
    // row i touches only bits <= i, so earlier fixes stay final
    std::uint32_t guess = static_cast<std::uint32_t>(rng.engine()()) & mask;
    for (int i = 0; i < n; ++i) {
      if (!(rows[i] & mask)) continue;
      std::uint32_t a = rows[i] & mask;
      std::uint32_t rhs = (rows[i] >> n) & 1u;
      if ((std::popcount(a & guess) & 1u) != rhs) guess ^= (1u << i);
    }
    if (guess == x) ++hits;
  }
  LearnerResult res;
  res.mode = "mc";
  res.trials = trials;
  res.success = static_cast<double>(hits) / trials;
  res.std_error =
      std::sqrt(std::max(res.success * (1.0 - res.success), 1e-300) / trials);
  return res;
}

// Exact vote-counting learner for n = 1: samples with a = 1 reveal x (the
// answer bit is -1 exactly when x = 1); a = 0 gives nothing. Tracks the
// distribution over (votes for 1, votes for 0) capped at T, guesses the
// majority with ties going to 0.
inline double majority_exact(int T) {
  double total = 0.0;
  for (int x = 0; x <= 1; ++x) {
    // DP over vote counts; each step votes with probability 1/2
    std::vector<std::vector<double>> pr(T + 1, std::vector<double>(T + 1, 0.0));
    pr[0][0] = 1.0;
    for (int t = 0; t < T; ++t) {
      std::vector<std::vector<double>> nx(T + 1,
                                          std::vector<double>(T + 1, 0.0));
      for (int c1 = 0; c1 <= t; ++c1)
        for (int c0 = 0; c0 + c1 <= t; ++c0) {
          double p = pr[c1][c0];
          if (p == 0.0) continue;
          nx[c1][c0] += 0.5 * p;  // a = 0, no vote
          if (x == 1)
            nx[c1 + 1][c0] += 0.5 * p;
          else
            nx[c1][c0 + 1] += 0.5 * p;
        }
      pr.swap(nx);
    }
    for (int c1 = 0; c1 <= T; ++c1)
      for (int c0 = 0; c0 + c1 <= T; ++c0) {
        int guess = c1 > c0 ? 1 : 0;
        if (guess == x) total += 0.5 * pr[c1][c0];
      }
  }
  return total;
}

// Sticky 1-bit flag for n = 1: latches on the first sample (a=1, b=-1).
inline double counter_exact(int T) {
  // x = 0: flag never set, guess 0, always correct.
  // x = 1: correct iff some sample has a = 1, probability 1 - 2^-T.
  return 0.5 * (1.0 + (1.0 - std::ldexp(1.0, -T)));
}

}  // namespace detail

inline LearnerResult run_classical_learner(const LearningInstance& inst,
                                           LearnerKind kind,
                                           bool monte_carlo = false,
                                           std::int64_t trials = 100000,
                                           std::uint64_t seed = 1) {
  switch (kind) {
    case LearnerKind::kGaussElim:
      if (monte_carlo)
        return detail::gauss_elim_mc(inst.n, inst.T, trials, seed);
      return {detail::gauss_elim_exact(inst.n, inst.T), "exact", 0, 0.0};
    case LearnerKind::kMajority:
      if (inst.n != 1)
        throw std::invalid_argument("majority learner: only n = 1 supported");
      return {detail::majority_exact(inst.T), "exact", 0, 0.0};
    case LearnerKind::kCounter:
      if (inst.n != 1)
        throw std::invalid_argument("counter learner: only n = 1 supported");
      return {detail::counter_exact(inst.T), "exact", 0, 0.0};
  }
  throw std::invalid_argument("unsupported learner kind");
}

}  // namespace qlml
