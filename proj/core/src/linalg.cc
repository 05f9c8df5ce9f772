// Copyright 2026 The strsbp Authors
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

#include "strsbp/linalg.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <utility>

namespace strsbp {

LuDecomposition::LuDecomposition(Matrix a, double pivot_tolerance)
    : lu_(std::move(a)), permutation_(lu_.rows()) {
  assert(lu_.rows() == lu_.cols());
  const std::size_t n = lu_.rows();
  std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
  const double threshold = pivot_tolerance * std::max(1.0, InfNorm(lu_));

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double candidate = std::abs(lu_(i, k));
      if (candidate > best) {
        best = candidate;
        pivot = i;
      }
    }
    if (best <= threshold) {
      singular_ = true;
      failed_pivot_ = k;
      return;
    }
    if (pivot != k) {
      std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(),
                       lu_.row(pivot).begin());
      std::swap(permutation_[k], permutation_[pivot]);
    }
    const double inv_pivot = 1.0 / lu_(k, k);
    auto pivot_row = lu_.row(k);
    for (std::size_t i = k + 1; i < n; ++i) {
      auto row = lu_.row(i);
      const double factor = row[k] * inv_pivot;
      row[k] = factor;
      if (factor == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) row[j] -= factor * pivot_row[j];
    }
  }
}

Matrix LuDecomposition::Solve(const Matrix& rhs) const {
  assert(!singular_);
  assert(rhs.rows() == lu_.rows());
  const std::size_t n = lu_.rows();
  const std::size_t m = rhs.cols();
  Matrix x(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    auto src = rhs.row(permutation_[i]);
    std::copy(src.begin(), src.end(), x.row(i).begin());
  }
  // Forward substitution with unit lower triangle.
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t k = 0; k < i; ++k) {
      const double l = lu_(i, k);
      if (l == 0.0) continue;
      auto xk = x.row(k);
      for (std::size_t j = 0; j < m; ++j) xi[j] -= l * xk[j];
    }
  }
  // Back substitution.
  for (std::size_t ii = n; ii-- > 0;) {
    auto xi = x.row(ii);
    for (std::size_t k = ii + 1; k < n; ++k) {
      const double u = lu_(ii, k);
      if (u == 0.0) continue;
      auto xk = x.row(k);
      for (std::size_t j = 0; j < m; ++j) xi[j] -= u * xk[j];
    }
    const double inv = 1.0 / lu_(ii, ii);
    for (std::size_t j = 0; j < m; ++j) xi[j] *= inv;
  }
  return x;
}

std::vector<double> LuDecomposition::SolveTransposed(
    std::span<const double> b) const {
  assert(!singular_);
  assert(b.size() == lu_.rows());
  const std::size_t n = lu_.rows();
  // A^T = U^T L^T P, so solve U^T y = b, then L^T z = y, then x = P^T z.
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    double sum = y[i];
    for (std::size_t k = 0; k < i; ++k) sum -= lu_(k, i) * y[k];
    y[i] = sum / lu_(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double sum = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) sum -= lu_(k, ii) * y[k];
    y[ii] = sum;
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[permutation_[i]] = y[i];
  return x;
}

}  // namespace strsbp
