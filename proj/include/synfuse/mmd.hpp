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

#include <memory>
#include <span>
#include <variant>

#include "synfuse/net.hpp"
#include "synfuse/samples.hpp"

namespace synfuse {

struct GaussianKernel {
  double sigma = 1.0;
};

// Feature-map kernel blended with a raw-input gaussian, bounded away from
// zero by eps_floor so it stays characteristic:
//   k(a,b) = [(1-eps)*gauss(phi(a),phi(b),sigma_feature) + eps]
//            * gauss(a,b,sigma_raw)
struct DeepKernel {
  std::shared_ptr<const FeedforwardNet> phi;
  double sigma_feature = 1.0;
  double sigma_raw = 1.0;
  double eps_floor = 0.1;
};

using KernelSpec = std::variant<GaussianKernel, DeepKernel>;

void validate_kernel(const KernelSpec& spec);

double gaussian_kernel(std::span<const double> a, std::span<const double> b,
                       double sigma);

// Single-pair evaluation; batch paths below precompute phi once per side.
double kernel_value(const KernelSpec& spec, std::span<const double> a,
                    std::span<const double> b);

// Full kernel matrix k(a_i, b_j).
Matrix kernel_gram(const KernelSpec& spec, const Matrix& a, const Matrix& b);

// Unbiased squared-MMD U-statistic:
//   mean off-diagonal k(A,A) + mean off-diagonal k(B,B) - 2 mean k(A,B).
// Slightly negative values are expected near the null.
double mmd2_unbiased(const Matrix& a, const Matrix& b, const KernelSpec& spec);

struct Mmd2WithGrad {
  double value = 0.0;
  Matrix grad_a;  // d value / d a, same shape as a
  Matrix grad_b;
};

// Value plus exact gradients w.r.t. both sample sets. For the deep kernel
// the gradient includes the path through the feature map's inputs (phi
// parameters held fixed).
Mmd2WithGrad mmd2_unbiased_with_grad(const Matrix& a, const Matrix& b,
                                     const KernelSpec& spec);

// Gradient of mmd2 w.r.t. the feature-map parameters (deep kernel only),
// used when the kernel is trained to maximize the dependence statistic.
std::vector<double> mmd2_phi_param_grad(const Matrix& a, const Matrix& b,
                                        const DeepKernel& kernel);

// Median pairwise Euclidean distance over at most 1000 evenly-strided rows.
// Zero median falls back to the mean distance, then to 1.
double median_heuristic(const Matrix& rows);

// MMD between the empirical joint (paired rows) and the empirical product
// of marginals (derangement-shuffled rows), averaged over n_shuffles fresh
// shuffles.
DependenceEstimate mmd_dependence(const PairedSamples& s,
                                  const KernelSpec& spec, SeededRng& rng,
                                  int n_shuffles = 4);

// p = (1 + #{null >= observed}) / (n_perm + 1), nulls from full-permutation
// resampling of the y side.
double permutation_pvalue(const PairedSamples& s, const KernelSpec& spec,
                          SeededRng& rng, int n_perm);

}  // namespace synfuse
