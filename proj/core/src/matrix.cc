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

#include "strsbp/matrix.h"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace strsbp {

Matrix Matrix::Identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  }
  return t;
}

Matrix Multiply(const Matrix& a, const Matrix& b) {
  assert(a.cols() == b.rows());
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix Subtract(const Matrix& a, const Matrix& b) {
  assert(a.SameShape(b));
  Matrix out = a;
  auto dst = out.values();
  auto src = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  return out;
}

std::vector<double> MultiplyTransposed(const Matrix& m,
                                       std::span<const double> v) {
  assert(v.size() == m.rows());
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double vr = v[r];
    if (vr == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += row[c] * vr;
  }
  return out;
}

std::vector<double> MultiplyVector(const Matrix& m,
                                   std::span<const double> v) {
  assert(v.size() == m.cols());
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    double sum = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) sum += row[c] * v[c];
    out[r] = sum;
  }
  return out;
}

double InfNorm(const Matrix& m) {
  double norm = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (double x : m.row(r)) sum += std::abs(x);
    norm = std::max(norm, sum);
  }
  return norm;
}

double MaxAbsDifference(const Matrix& a, const Matrix& b) {
  assert(a.SameShape(b));
  double worst = 0.0;
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, std::abs(x[i] - y[i]));
  }
  return worst;
}

bool AllFinite(const Matrix& m) {
  return std::all_of(m.values().begin(), m.values().end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace strsbp
