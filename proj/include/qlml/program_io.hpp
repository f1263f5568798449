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

#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qlml/branching_program.hpp"

namespace qlml {

// Program description files. Line-oriented, '#' starts a comment, unknown
// keywords are rejected. Grammar:
//
//   q <int>
//   m <int>
//   T <int>
//   channel t=<int|*> a=<int|*> b=<+1|-1|*> identity
//   channel t=<int|*> a=<int|*> b=<+1|-1|*> table <w'_0> ... <w'_{2^m-1}>
//   channel t=<int|*> a=<int|*> b=<+1|-1|*> kraus
//     op in=<w>
//     sector out=<w'>
//     <2^q rows of 2^q complex entries, each "re" or "re,im">
//     ...more sector/op blocks...
//     end
//   output v=<int|*> w=<int|*> guess <x>
//
// Channel rules resolve by most-specific match (exact keys beat wildcards),
// later rules breaking ties. The output map must cover every (v, w).

struct OutputRule {
  int v = -1;  // -1 = any
  int w = -1;
  int guess = 0;
};

struct ProgramSpec {
  int q = -1, m = -1, T = -1;
  ChannelSchedule schedule;
  std::vector<OutputRule> outputs;
};

namespace detail {

inline std::string strip_comment(std::string line) {
  auto pos = line.find('#');
  if (pos != std::string::npos) line.erase(pos);
  while (!line.empty() && (line.back() == ' ' || line.back() == '\t' ||
                           line.back() == '\r'))
    line.pop_back();
  return line;
}

inline int parse_wild_int(const std::string& tok, const std::string& what) {
  if (tok == "*") return -1;
  try {
    std::size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (...) {
    throw ParseError("program: bad " + what + " '" + tok + "'");
  }
}

inline int parse_wild_key(const std::string& tok, const std::string& key) {
  if (tok.rfind(key + "=", 0) != 0)
    throw ParseError("program: expected " + key + "=..., got '" + tok + "'");
  return parse_wild_int(tok.substr(key.size() + 1), key);
}

inline int parse_bit_value(const std::string& tok) {
  std::string v = tok.substr(2);
  if (v == "*") return 0;
  if (v == "+1" || v == "1") return +1;
  if (v == "-1") return -1;
  throw ParseError("program: bad b value '" + v + "'");
}

inline Complex parse_complex(const std::string& tok) {
  auto comma = tok.find(',');
  try {
    if (comma == std::string::npos) return Complex(std::stod(tok), 0.0);
    return Complex(std::stod(tok.substr(0, comma)),
                   std::stod(tok.substr(comma + 1)));
  } catch (...) {
    throw ParseError("program: bad complex entry '" + tok + "'");
  }
}

}  // namespace detail

inline ProgramSpec parse_program(std::istream& in) {
  ProgramSpec spec;
  std::string raw;
  int lineno = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, raw)) {
      ++lineno;
      out = detail::strip_comment(raw);
      std::istringstream probe(out);
      std::string tok;
      if (probe >> tok) return true;
    }
    return false;
  };

  std::string line;
  while (next_line(line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "q" || key == "m" || key == "T") {
      int v;
      std::string extra;
      if (!(ls >> v) || (ls >> extra) || v < 0)
        throw ParseError("program: bad header line '" + line + "'");
      (key == "q" ? spec.q : key == "m" ? spec.m : spec.T) = v;
    } else if (key == "channel") {
      if (spec.q < 0 || spec.m < 0)
        throw ParseError("program: q and m must precede channel lines");
      std::string ts, as, bs, kind;
      if (!(ls >> ts >> as >> bs >> kind))
        throw ParseError("program: bad channel line '" + line + "'");
      int t = detail::parse_wild_key(ts, "t");
      int a = detail::parse_wild_key(as, "a");
      if (bs.rfind("b=", 0) != 0)
        throw ParseError("program: expected b=..., got '" + bs + "'");
      int b = detail::parse_bit_value(bs);
      const int dv = 1 << spec.q;
      const int nw = 1 << spec.m;
      if (kind == "identity") {
        std::string extra;
        if (ls >> extra) throw ParseError("program: identity takes no args");
        spec.schedule.add(t, a, b, std::make_shared<KrausChannel>(
                                       identity_channel(spec.q, spec.m)));
      } else if (kind == "table") {
        std::vector<int> table(nw);
        for (int w = 0; w < nw; ++w)
          if (!(ls >> table[w]))
            throw ParseError("program: table needs 2^m targets");
        std::string extra;
        if (ls >> extra) throw ParseError("program: table has extra tokens");
        spec.schedule.add(t, a, b,
                          std::make_shared<KrausChannel>(
                              classical_table_channel(spec.q, spec.m, table)));
      } else if (kind == "kraus") {
        auto chan = std::make_shared<KrausChannel>(spec.q, spec.m);
        int cur_in = -1;
        Matrix cur_op;
        bool have_op = false;
        auto flush = [&] {
          if (have_op) chan->add_op(cur_in, cur_op);
          have_op = false;
        };
        std::string kline;
        while (true) {
          if (!next_line(kline))
            throw ParseError("program: kraus block missing 'end'");
          std::istringstream ks(kline);
          std::string kkey;
          ks >> kkey;
          if (kkey == "end") {
            flush();
            break;
          } else if (kkey == "op") {
            flush();
            std::string ins;
            if (!(ks >> ins))
              throw ParseError("program: op needs in=<w>");
            cur_in = detail::parse_wild_key(ins, "in");
            if (cur_in < 0 || cur_in >= nw)
              throw ParseError("program: op in= out of range");
            cur_op = Matrix::Zero(static_cast<Eigen::Index>(dv) * nw, dv);
            have_op = true;
          } else if (kkey == "sector") {
            if (!have_op) throw ParseError("program: sector outside op");
            std::string outs;
            if (!(ks >> outs))
              throw ParseError("program: sector needs out=<w>");
            int wo = detail::parse_wild_key(outs, "out");
            if (wo < 0 || wo >= nw)
              throw ParseError("program: sector out= out of range");
            for (int i = 0; i < dv; ++i) {
              std::string row;
              if (!next_line(row))
                throw ParseError("program: sector rows truncated");
              std::istringstream rs(row);
              for (int j = 0; j < dv; ++j) {
                std::string tok;
                if (!(rs >> tok))
                  throw ParseError("program: sector row too short");
                cur_op(static_cast<Eigen::Index>(wo) * dv + i, j) =
                    detail::parse_complex(tok);
              }
              std::string extra;
              if (rs >> extra)
                throw ParseError("program: sector row too long");
            }
          } else {
            throw ParseError("program: unknown kraus keyword '" + kkey + "'");
          }
        }
        spec.schedule.add(t, a, b, chan);
      } else {
        throw ParseError("program: unknown channel kind '" + kind + "'");
      }
    } else if (key == "output") {
      std::string vs, ws, guess_kw;
      int guess;
      if (!(ls >> vs >> ws >> guess_kw >> guess) || guess_kw != "guess")
        throw ParseError("program: bad output line '" + line + "'");
      std::string extra;
      if (ls >> extra) throw ParseError("program: output has extra tokens");
      OutputRule rule;
      rule.v = detail::parse_wild_key(vs, "v");
      rule.w = detail::parse_wild_key(ws, "w");
      rule.guess = guess;
      spec.outputs.push_back(rule);
    } else {
      throw ParseError("program: unknown keyword '" + key + "' at line " +
                       std::to_string(lineno));
    }
  }
  if (spec.q < 0 || spec.m < 0 || spec.T < 0)
    throw ParseError("program: q, m and T are required");
  return spec;
}

inline ProgramSpec parse_program_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("program: cannot open " + path);
  return parse_program(f);
}

// Resolves the parsed spec into a runnable program for concept width n:
// checks guess ranges and that the output rules cover every (v, w).
inline BranchingProgram bind_program(const ProgramSpec& spec, int n) {
  BranchingProgram prog;
  prog.q = spec.q;
  prog.m = spec.m;
  prog.T = spec.T;
  prog.schedule = spec.schedule;
  prog.output = OutputMap(spec.q, spec.m, 0);
  const int dv = 1 << spec.q, nw = 1 << spec.m;
  for (int v = 0; v < dv; ++v)
    for (int w = 0; w < nw; ++w) {
      const OutputRule* best = nullptr;
      int best_score = -1;
      for (const OutputRule& rule : spec.outputs) {
        if (rule.v >= 0 && rule.v != v) continue;
        if (rule.w >= 0 && rule.w != w) continue;
        int score = (rule.v >= 0) + (rule.w >= 0);
        if (score >= best_score) {
          best_score = score;
          best = &rule;
        }
      }
      if (!best)
        throw ParseError("program: output map misses (v=" +
                         std::to_string(v) + ", w=" + std::to_string(w) + ")");
      if (best->guess < 0 || best->guess >= (1 << n))
        throw ParseError("program: guess out of concept range");
      prog.output.set(v, w, best->guess);
    }
  return prog;
}

}  // namespace qlml
