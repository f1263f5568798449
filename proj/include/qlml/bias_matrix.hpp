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

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qlml/distribution.hpp"

namespace qlml {

// The learning-problem matrix M : A x X -> {-1, +1}. Rows are sample labels,
// columns are concepts.
class BiasMatrix {
 public:
  BiasMatrix(int rows, int cols, int fill = 1)
      : rows_(rows), cols_(cols),
        e_(static_cast<std::size_t>(rows) * cols,
           static_cast<std::int8_t>(fill)) {
    if (rows <= 0 || cols <= 0)
      throw std::invalid_argument("BiasMatrix: nonpositive dimensions");
    if (fill != 1 && fill != -1)
      throw std::invalid_argument("BiasMatrix: entries must be +-1");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  int operator()(int a, int x) const {
    return e_[static_cast<std::size_t>(a) * cols_ + x];
  }

  void set(int a, int x, int v) {
    if (v != 1 && v != -1)
      throw std::invalid_argument("BiasMatrix: entries must be +-1");
    e_[static_cast<std::size_t>(a) * cols_ + x] = static_cast<std::int8_t>(v);
  }

  RealVector row_vector(int a) const {
    RealVector r(cols_);
    for (int x = 0; x < cols_; ++x) r(x) = (*this)(a, x);
    return r;
  }

  // Number of rows a with M(a,x) = +1, per column.
  std::vector<int> plus_counts() const {
    std::vector<int> c(cols_, 0);
    for (int a = 0; a < rows_; ++a)
      for (int x = 0; x < cols_; ++x)
        if ((*this)(a, x) == 1) ++c[x];
    return c;
  }

 private:
  int rows_, cols_;
  std::vector<std::int8_t> e_;
};

// M(a,x) = (-1)^(a.x mod 2) over n-bit labels. The a = 0 row is all ones.
inline BiasMatrix inner_product_matrix(int n) {
  if (n < 1 || n > 12)
    throw std::invalid_argument("inner_product_matrix: n out of [1,12]");
  int size = 1 << n;
  BiasMatrix m(size, size);
  for (int a = 0; a < size; ++a)
    for (int x = 0; x < size; ++x)
      m.set(a, x, (std::popcount(static_cast<unsigned>(a & x)) & 1) ? -1 : 1);
  return m;
}

inline double row_correlation(const BiasMatrix& m, int a,
                              const DistributionX& p) {
  if (p.size() != m.cols())
    throw ShapeError("row_correlation: dimension mismatch");
  double s = 0.0;
  for (int x = 0; x < m.cols(); ++x) s += m(a, x) * p(x);
  return s;
}

// Text format: first line "R C", then R lines of C entries, each one of
// {+1, -1, 1}. Any other token is a parse error.
inline BiasMatrix read_bias_matrix(std::istream& in) {
  int rows = 0, cols = 0;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("matrix: empty input");
  {
    std::istringstream h(line);
    std::string extra;
    if (!(h >> rows >> cols) || (h >> extra))
      throw ParseError("matrix: header must be 'R C'");
  }
  if (rows <= 0 || cols <= 0) throw ParseError("matrix: bad dimensions");
  BiasMatrix m(rows, cols);
  for (int a = 0; a < rows; ++a) {
    if (!std::getline(in, line))
      throw ParseError("matrix: missing row " + std::to_string(a));
    std::istringstream ls(line);
    std::string tok;
    for (int x = 0; x < cols; ++x) {
      if (!(ls >> tok))
        throw ParseError("matrix: row " + std::to_string(a) + " too short");
      if (tok == "+1" || tok == "1")
        m.set(a, x, 1);
      else if (tok == "-1")
        m.set(a, x, -1);
      else
        throw ParseError("matrix: bad token '" + tok + "'");
    }
    std::string extra;
    if (ls >> extra)
      throw ParseError("matrix: row " + std::to_string(a) + " too long");
  }
  return m;
}

inline BiasMatrix read_bias_matrix_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("matrix: cannot open " + path);
  return read_bias_matrix(f);
}

inline void write_bias_matrix(std::ostream& out, const BiasMatrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (int a = 0; a < m.rows(); ++a) {
    for (int x = 0; x < m.cols(); ++x)
      out << (x ? " " : "") << (m(a, x) > 0 ? "+1" : "-1");
    out << '\n';
  }
}

}  // namespace qlml
