// Copyright 2026 The synfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "synfuse/matrix.hpp"

#include <cmath>
#include <string>

namespace synfuse {

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix Matrix::take_rows(std::span<const std::size_t> idx) const {
  Matrix out(idx.size(), cols_);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= rows_) throw UsageError("row index out of range");
    const double* src = row(idx[i]);
    double* dst = out.row(i);
    for (std::size_t c = 0; c < cols_; ++c) dst[c] = src[c];
  }
  return out;
}

Matrix Matrix::standard_normal(std::size_t rows, std::size_t cols,
                               SeededRng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) m.data()[i] = rng.normal();
  return m;
}

Matrix hcat(const std::vector<const Matrix*>& blocks) {
  if (blocks.empty()) throw UsageError("hcat: empty block list");
  const std::size_t n = blocks.front()->rows();
  std::size_t width = 0;
  for (const Matrix* b : blocks) {
    if (b->rows() != n) throw ShapeError("hcat: row counts differ");
    width += b->cols();
  }
  Matrix out(n, width);
  for (std::size_t r = 0; r < n; ++r) {
    double* dst = out.row(r);
    for (const Matrix* b : blocks) {
      const double* src = b->row(r);
      for (std::size_t c = 0; c < b->cols(); ++c) *dst++ = src[c];
    }
  }
  return out;
}

Matrix hcat(const Matrix& a, const Matrix& b) { return hcat({&a, &b}); }

void ensure_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) {
    throw NumericError(std::string("non-finite values in ") + what);
  }
}

void ensure_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string("non-finite values in ") + what);
    }
  }
}

}  // namespace synfuse
