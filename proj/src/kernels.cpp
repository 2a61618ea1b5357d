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

#include "synfuse/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>

namespace synfuse::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// Below this many output elements the OpenMP fork costs more than it saves.
constexpr std::size_t kParallelThreshold = 8192;

bool use_parallel(std::size_t work) {
  return g_parallel.load(std::memory_order_relaxed) &&
         work >= kParallelThreshold;
}

void check_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: inner widths differ");
}
void check_nn(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul_nn: inner widths differ");
}
void check_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: row counts differ");
}

inline void matmul_nt_row(const Matrix& a, const Matrix& b, Matrix& c,
                          std::size_t r) {
  const std::size_t k = a.cols(), m = b.rows();
  const double* ar = a.row(r);
  double* cr = c.row(r);
  for (std::size_t j = 0; j < m; ++j) {
    const double* br = b.row(j);
    double acc = 0.0;
    for (std::size_t t = 0; t < k; ++t) acc += ar[t] * br[t];
    cr[j] = acc;
  }
}

inline void matmul_nn_row(const Matrix& a, const Matrix& b, Matrix& c,
                          std::size_t r) {
  const std::size_t k = a.cols(), m = b.cols();
  const double* ar = a.row(r);
  double* cr = c.row(r);
  for (std::size_t t = 0; t < k; ++t) {
    const double av = ar[t];
    const double* br = b.row(t);
    for (std::size_t j = 0; j < m; ++j) cr[j] += av * br[j];
  }
}

inline void matmul_tn_row(const Matrix& a, const Matrix& b, Matrix& c,
                          std::size_t i) {
  const std::size_t n = a.rows(), m = b.cols();
  double* ci = c.row(i);
  for (std::size_t r = 0; r < n; ++r) {
    const double av = a(r, i);
    const double* br = b.row(r);
    for (std::size_t j = 0; j < m; ++j) ci[j] += av * br[j];
  }
}

inline void sqdist_row(const Matrix& a, const Matrix& b, Matrix& d,
                       std::size_t i) {
  const std::size_t m = b.rows(), w = a.cols();
  const double* ai = a.row(i);
  double* di = d.row(i);
  for (std::size_t j = 0; j < m; ++j) {
    const double* bj = b.row(j);
    double acc = 0.0;
    for (std::size_t c = 0; c < w; ++c) {
      const double diff = ai[c] - bj[c];
      acc += diff * diff;
    }
    di[j] = acc;
  }
}

}  // namespace

void set_parallel(bool enabled) {
  g_parallel.store(enabled, std::memory_order_relaxed);
}

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }

Matrix matmul_nt_serial(const Matrix& a, const Matrix& b) {
  check_nt(a, b);
  Matrix c(a.rows(), b.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) matmul_nt_row(a, b, c, r);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_nt(a, b);
  Matrix c(a.rows(), b.rows());
  const std::int64_t n = static_cast<std::int64_t>(a.rows());
  if (use_parallel(a.rows() * b.rows() * a.cols())) {
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
      matmul_nt_row(a, b, c, static_cast<std::size_t>(r));
    }
  } else {
    for (std::int64_t r = 0; r < n; ++r) {
      matmul_nt_row(a, b, c, static_cast<std::size_t>(r));
    }
  }
  return c;
}

Matrix matmul_nn_serial(const Matrix& a, const Matrix& b) {
  check_nn(a, b);
  Matrix c(a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) matmul_nn_row(a, b, c, r);
  return c;
}

Matrix matmul_nn(const Matrix& a, const Matrix& b) {
  check_nn(a, b);
  Matrix c(a.rows(), b.cols());
  const std::int64_t n = static_cast<std::int64_t>(a.rows());
  if (use_parallel(a.rows() * a.cols() * b.cols())) {
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
      matmul_nn_row(a, b, c, static_cast<std::size_t>(r));
    }
  } else {
    for (std::int64_t r = 0; r < n; ++r) {
      matmul_nn_row(a, b, c, static_cast<std::size_t>(r));
    }
  }
  return c;
}

Matrix matmul_tn_serial(const Matrix& a, const Matrix& b) {
  check_tn(a, b);
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) matmul_tn_row(a, b, c, i);
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_tn(a, b);
  Matrix c(a.cols(), b.cols());
  const std::int64_t k = static_cast<std::int64_t>(a.cols());
  if (use_parallel(a.rows() * a.cols() * b.cols())) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < k; ++i) {
      matmul_tn_row(a, b, c, static_cast<std::size_t>(i));
    }
  } else {
    for (std::int64_t i = 0; i < k; ++i) {
      matmul_tn_row(a, b, c, static_cast<std::size_t>(i));
    }
  }
  return c;
}

std::vector<double> colsum(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* mr = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) s[c] += mr[c];
  }
  return s;
}

Matrix sqdist_serial(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("sqdist: column widths differ");
  Matrix d(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) sqdist_row(a, b, d, i);
  return d;
}

Matrix sqdist(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("sqdist: column widths differ");
  Matrix d(a.rows(), b.rows());
  const std::int64_t n = static_cast<std::int64_t>(a.rows());
  if (use_parallel(a.rows() * b.rows() * a.cols())) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      sqdist_row(a, b, d, static_cast<std::size_t>(i));
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      sqdist_row(a, b, d, static_cast<std::size_t>(i));
    }
  }
  return d;
}

void exp_neg_scale_inplace_serial(Matrix& m, double gamma) {
  double* p = m.data();
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) p[i] = std::exp(-gamma * p[i]);
}

void exp_neg_scale_inplace(Matrix& m, double gamma) {
  double* p = m.data();
  const std::int64_t n = static_cast<std::int64_t>(m.size());
  if (use_parallel(m.size())) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) p[i] = std::exp(-gamma * p[i]);
  } else {
    for (std::int64_t i = 0; i < n; ++i) p[i] = std::exp(-gamma * p[i]);
  }
}

double sum_all(const Matrix& g) {
  double total = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const double* gi = g.row(i);
    double row = 0.0;
    for (std::size_t j = 0; j < g.cols(); ++j) row += gi[j];
    total += row;
  }
  return total;
}

double sum_offdiag(const Matrix& g) {
  if (g.rows() != g.cols()) throw ShapeError("sum_offdiag: matrix not square");
  double total = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const double* gi = g.row(i);
    double row = 0.0;
    for (std::size_t j = 0; j < g.cols(); ++j) {
      if (j != i) row += gi[j];
    }
    total += row;
  }
  return total;
}

}  // namespace synfuse::kernels
