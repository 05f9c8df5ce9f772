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

#ifndef STRSBP_MATRIX_H_
#define STRSBP_MATRIX_H_

#include <cstddef>
#include <span>
#include <vector>

namespace strsbp {

// Dense row-major matrix of doubles. Layer sizes in this project stay in the
// hundreds, so a plain contiguous buffer is all that is needed.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix Identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool SameShape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix Transpose(const Matrix& m);
Matrix Multiply(const Matrix& a, const Matrix& b);
Matrix Subtract(const Matrix& a, const Matrix& b);

// Returns m^T * v.
std::vector<double> MultiplyTransposed(const Matrix& m,
                                       std::span<const double> v);
// Returns m * v.
std::vector<double> MultiplyVector(const Matrix& m, std::span<const double> v);

// Maximum absolute row sum.
double InfNorm(const Matrix& m);
double MaxAbsDifference(const Matrix& a, const Matrix& b);
bool AllFinite(const Matrix& m);

}  // namespace strsbp

#endif  // STRSBP_MATRIX_H_
