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

#include <cmath>
#include <string>

#include "qlml/linalg.hpp"

namespace qlml {

// A probability distribution over the concept labels x in {0,1}^n.
// Entries are nonnegative and sum to one within tol; tiny negative drift
// (within tol) is clamped at construction.
class DistributionX {
 public:
  explicit DistributionX(RealVector p, double tol = kDefaultTol) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p(i) < -tol)
        throw std::invalid_argument("DistributionX: negative entry " +
                                    std::to_string(p(i)));
      if (p(i) < 0.0) p(i) = 0.0;
      sum += p(i);
    }
    if (std::abs(sum - 1.0) > tol * std::max(1.0, std::abs(sum)))
      throw std::invalid_argument("DistributionX: total mass " +
                                  std::to_string(sum));
    p_ = std::move(p);
  }

  static DistributionX uniform(int size) {
    return DistributionX(RealVector::Constant(size, 1.0 / size));
  }

  static DistributionX point_mass(int size, int x) {
    RealVector p = RealVector::Zero(size);
    p(x) = 1.0;
    return DistributionX(std::move(p));
  }

  double operator()(int x) const { return p_(x); }
  const RealVector& vec() const { return p_; }
  int size() const { return static_cast<int>(p_.size()); }

  double l2_norm() const { return p_.norm(); }
  double linf_norm() const { return p_.maxCoeff(); }

 private:
  RealVector p_;
};

inline double inner(const DistributionX& a, const DistributionX& b) {
  return a.vec().dot(b.vec());
}

}  // namespace qlml
