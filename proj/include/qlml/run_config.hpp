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
#include <optional>
#include <sstream>
#include <string>

#include "qlml/config.hpp"

namespace qlml {

// Experiment configuration: flat key = value pairs under one level of
// [section] headers. Unknown sections or keys are errors.
struct RunConfig {
  // [instance]
  std::string matrix = "inner-product";  // or "file:<path>"
  int n = 2;
  int q = 0;
  int m = 0;
  int T = 1;

  // [pipeline]
  double l = 0.0;
  double r = 1.0;
  double target_l = -1.0;  // target-norm exponent; < 0 means use l
  bool enforce_params = false;
  std::string kp, lp, rp;  // primed triple for enforcement, as fractions
  bool track_badness = true;

  // [program]
  std::string registry = "random-guess";
  std::string program_file;
  double angle = 0.61;

  // [run]
  std::string mode = "simulate";
  std::uint64_t seed = 1;
  std::int64_t samples = 100000;
  int budget = 1000;
  double tol = kDefaultTol;
  std::string out;
};

inline RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto pos = line.find('#');
    if (pos != std::string::npos) line.erase(pos);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: bad section at line " +
                          std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      if (section != "instance" && section != "pipeline" &&
          section != "program" && section != "run")
        throw ConfigError("config: unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at line " +
                        std::to_string(lineno));
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t");
      auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string()
                                    : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config: empty key or value at line " +
                        std::to_string(lineno));

    auto as_int = [&](const std::string& v) {
      try {
        std::size_t used;
        long long r = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
      } catch (...) {
        throw ConfigError("config: bad integer '" + v + "' for " + key);
      }
    };
    auto as_double = [&](const std::string& v) {
      try {
        std::size_t used;
        double r = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
      } catch (...) {
        throw ConfigError("config: bad number '" + v + "' for " + key);
      }
    };
    auto as_bool = [&](const std::string& v) {
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw ConfigError("config: bad boolean '" + v + "' for " + key);
    };

    if (section == "instance") {
      if (key == "matrix")
        cfg.matrix = value;
      else if (key == "n")
        cfg.n = static_cast<int>(as_int(value));
      else if (key == "q")
        cfg.q = static_cast<int>(as_int(value));
      else if (key == "m")
        cfg.m = static_cast<int>(as_int(value));
      else if (key == "T")
        cfg.T = static_cast<int>(as_int(value));
      else
        throw ConfigError("config: unknown key '" + key + "' in [instance]");
    } else if (section == "pipeline") {
      if (key == "l")
        cfg.l = as_double(value);
      else if (key == "r")
        cfg.r = as_double(value);
      else if (key == "target_l")
        cfg.target_l = as_double(value);
      else if (key == "enforce_params")
        cfg.enforce_params = as_bool(value);
      else if (key == "kp")
        cfg.kp = value;
      else if (key == "lp")
        cfg.lp = value;
      else if (key == "rp")
        cfg.rp = value;
      else if (key == "track_badness")
        cfg.track_badness = as_bool(value);
      else
        throw ConfigError("config: unknown key '" + key + "' in [pipeline]");
    } else if (section == "program") {
      if (key == "registry")
        cfg.registry = value;
      else if (key == "file")
        cfg.program_file = value;
      else if (key == "angle")
        cfg.angle = as_double(value);
      else
        throw ConfigError("config: unknown key '" + key + "' in [program]");
    } else if (section == "run") {
      if (key == "mode")
        cfg.mode = value;
      else if (key == "seed")
        cfg.seed = static_cast<std::uint64_t>(as_int(value));
      else if (key == "samples")
        cfg.samples = as_int(value);
      else if (key == "budget")
        cfg.budget = static_cast<int>(as_int(value));
      else if (key == "tol")
        cfg.tol = as_double(value);
      else if (key == "out")
        cfg.out = value;
      else
        throw ConfigError("config: unknown key '" + key + "' in [run]");
    } else {
      throw ConfigError("config: key '" + key + "' outside any section");
    }
  }
  if (cfg.mode != "simulate" && cfg.mode != "truncate" && cfg.mode != "verify")
    throw ConfigError("config: unknown mode '" + cfg.mode + "'");
  return cfg;
}

inline RunConfig parse_run_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  return parse_run_config(f);
}

}  // namespace qlml
