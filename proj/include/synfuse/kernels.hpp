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

#pragma once

#include <vector>

#include "synfuse/matrix.hpp"

// Hot inner loops. Each kernel comes in an OpenMP-parallel flavor (the
// default entry point) and a plain serial reference kept for tests and the
// benchmark. Parallel versions split work by output row; every output
// element is accumulated by exactly one thread in the same order as the
// serial loop, so results are bit-identical regardless of thread count.

namespace synfuse::kernels {

void set_parallel(bool enabled);
bool parallel_enabled();

// C = A * B^T   (A: n x k, B: m x k) -> n x m
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_nt_serial(const Matrix& a, const Matrix& b);

// C = A * B     (A: n x k, B: k x m) -> n x m
Matrix matmul_nn(const Matrix& a, const Matrix& b);
Matrix matmul_nn_serial(const Matrix& a, const Matrix& b);

// C = A^T * B   (A: n x k, B: n x m) -> k x m
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_tn_serial(const Matrix& a, const Matrix& b);

// Column sums of M, length M.cols().
std::vector<double> colsum(const Matrix& m);

// D(i,j) = ||a_i - b_j||^2   (A: n x d, B: m x d) -> n x m
Matrix sqdist(const Matrix& a, const Matrix& b);
Matrix sqdist_serial(const Matrix& a, const Matrix& b);

// m(i,j) <- exp(-gamma * m(i,j))
void exp_neg_scale_inplace(Matrix& m, double gamma);
void exp_neg_scale_inplace_serial(Matrix& m, double gamma);

// Ordered reductions over a gram matrix (serial by design; the additions
// are memory-bound and the fixed order keeps results reproducible).
double sum_all(const Matrix& g);
double sum_offdiag(const Matrix& g);

}  // namespace synfuse::kernels
