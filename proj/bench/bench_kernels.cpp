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

// Times the OpenMP kernels against their serial references and checks the
// results agree bitwise. Not part of the test suite; run manually.

#include <chrono>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "synfuse/kernels.hpp"
#include "synfuse/rng.hpp"

using synfuse::Matrix;
using synfuse::SeededRng;
namespace kernels = synfuse::kernels;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.data()[i] != b.data()[i]) return false;
  }
  return true;
}

void report(const char* name, double serial_ms, double parallel_ms,
            bool identical) {
  std::printf("%-28s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   %s\n",
              name, serial_ms, parallel_ms, serial_ms / parallel_ms,
              identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP\n");
#endif

  SeededRng rng(42);
  const int reps = 5;

  {
    const Matrix a = Matrix::standard_normal(512, 256, rng);
    const Matrix b = Matrix::standard_normal(512, 256, rng);
    Matrix rs, rp;
    const double ts = time_ms([&] { rs = kernels::matmul_nt_serial(a, b); }, reps);
    const double tp = time_ms([&] { rp = kernels::matmul_nt(a, b); }, reps);
    report("matmul_nt 512x256x512", ts, tp, bit_equal(rs, rp));
  }
  {
    const Matrix a = Matrix::standard_normal(512, 256, rng);
    const Matrix b = Matrix::standard_normal(256, 512, rng);
    Matrix rs, rp;
    const double ts = time_ms([&] { rs = kernels::matmul_nn_serial(a, b); }, reps);
    const double tp = time_ms([&] { rp = kernels::matmul_nn(a, b); }, reps);
    report("matmul_nn 512x256x512", ts, tp, bit_equal(rs, rp));
  }
  {
    const Matrix a = Matrix::standard_normal(512, 256, rng);
    const Matrix b = Matrix::standard_normal(512, 384, rng);
    Matrix rs, rp;
    const double ts = time_ms([&] { rs = kernels::matmul_tn_serial(a, b); }, reps);
    const double tp = time_ms([&] { rp = kernels::matmul_tn(a, b); }, reps);
    report("matmul_tn 256x512x384", ts, tp, bit_equal(rs, rp));
  }
  {
    const Matrix a = Matrix::standard_normal(1024, 16, rng);
    const Matrix b = Matrix::standard_normal(1024, 16, rng);
    Matrix rs, rp;
    const double ts = time_ms([&] { rs = kernels::sqdist_serial(a, b); }, reps);
    const double tp = time_ms([&] { rp = kernels::sqdist(a, b); }, reps);
    report("sqdist 1024x1024x16", ts, tp, bit_equal(rs, rp));
  }
  {
    Matrix d = Matrix::standard_normal(1024, 1024, rng);
    for (std::size_t i = 0; i < d.size(); ++i) {
      d.data()[i] = d.data()[i] * d.data()[i];
    }
    Matrix ds = d, dp = d;
    const double ts = time_ms(
        [&] {
          ds = d;
          kernels::exp_neg_scale_inplace_serial(ds, 0.5);
        },
        reps);
    const double tp = time_ms(
        [&] {
          dp = d;
          kernels::exp_neg_scale_inplace(dp, 0.5);
        },
        reps);
    report("exp_neg_scale 1M", ts, tp, bit_equal(ds, dp));
  }
  return 0;
}
