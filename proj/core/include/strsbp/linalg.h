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

#ifndef STRSBP_LINALG_H_
#define STRSBP_LINALG_H_

#include <cstddef>
#include <span>
#include <vector>

#include "strsbp/matrix.h"

namespace strsbp {

// LU factorization with partial (row) pivoting, P*A = L*U, stored in place.
class LuDecomposition {
 public:
  // Pivots whose magnitude falls at or below pivot_tolerance * max(1, |A|_inf)
  // mark the matrix as singular to working precision.
  explicit LuDecomposition(Matrix a, double pivot_tolerance = 1e-12);

  bool singular() const { return singular_; }
  // Row at which elimination found a negligible pivot (meaningful only when
  // singular()).
  std::size_t failed_pivot() const { return failed_pivot_; }

  // Solves A*X = rhs for every column of rhs.
  Matrix Solve(const Matrix& rhs) const;
  // Solves A^T*x = b.
  std::vector<double> SolveTransposed(std::span<const double> b) const;

 private:
  Matrix lu_;
  std::vector<std::size_t> permutation_;
  bool singular_ = false;
  std::size_t failed_pivot_ = 0;
};

}  // namespace strsbp

#endif  // STRSBP_LINALG_H_
