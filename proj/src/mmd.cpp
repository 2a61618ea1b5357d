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

#include "synfuse/mmd.hpp"

#include <algorithm>
#include <cmath>

#include "synfuse/kernels.hpp"

namespace synfuse {

namespace {

double gamma_of(double sigma) { return 1.0 / (2.0 * sigma * sigma); }

void check_sigma(double sigma, const char* what) {
  if (!(sigma > 0.0)) {
    throw ConfigError(std::string(what) + " must be positive");
  }
}

struct GramParts {
  Matrix combined;  // k(a_i, b_j)
  // Deep-kernel factors kept for gradient paths; empty for gaussian.
  Matrix feature;  // exp(-gamma_f ||phi(a_i)-phi(b_j)||^2)
  Matrix raw;      // exp(-gamma_r ||a_i-b_j||^2)
};

GramParts gram_parts(const KernelSpec& spec, const Matrix& a, const Matrix& b,
                     const Matrix* fa, const Matrix* fb) {
  GramParts out;
  if (const auto* g = std::get_if<GaussianKernel>(&spec)) {
    out.combined = kernels::sqdist(a, b);
    kernels::exp_neg_scale_inplace(out.combined, gamma_of(g->sigma));
    return out;
  }
  const auto& d = std::get<DeepKernel>(spec);
  out.feature = kernels::sqdist(*fa, *fb);
  kernels::exp_neg_scale_inplace(out.feature, gamma_of(d.sigma_feature));
  out.raw = kernels::sqdist(a, b);
  kernels::exp_neg_scale_inplace(out.raw, gamma_of(d.sigma_raw));
  out.combined = Matrix(a.rows(), b.rows());
  const double eps = d.eps_floor;
  for (std::size_t i = 0; i < out.combined.size(); ++i) {
    out.combined.data()[i] =
        ((1.0 - eps) * out.feature.data()[i] + eps) * out.raw.data()[i];
  }
  return out;
}

Matrix feature_map(const DeepKernel& d, const Matrix& x) {
  return net_forward(*d.phi, x).output();
}

double u_statistic_from_grams(const Matrix& gaa, const Matrix& gbb,
                              const Matrix& gab) {
  const double n = static_cast<double>(gaa.rows());
  const double m = static_cast<double>(gbb.rows());
  const double term_a = kernels::sum_offdiag(gaa) / (n * (n - 1.0));
  const double term_b = kernels::sum_offdiag(gbb) / (m * (m - 1.0));
  const double cross = 2.0 * kernels::sum_all(gab) / (n * m);
  return term_a + term_b - cross;
}

void check_mmd_inputs(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("mmd2_unbiased: column widths differ");
  }
  if (a.rows() < 2 || b.rows() < 2) {
    throw InsufficientSamplesError(
        "mmd2_unbiased needs at least 2 rows per set");
  }
}

}  // namespace

void validate_kernel(const KernelSpec& spec) {
  if (const auto* g = std::get_if<GaussianKernel>(&spec)) {
    check_sigma(g->sigma, "gaussian kernel sigma");
    return;
  }
  const auto& d = std::get<DeepKernel>(spec);
  if (!d.phi) throw ConfigError("deep kernel needs a feature map");
  check_sigma(d.sigma_feature, "deep kernel sigma_feature");
  check_sigma(d.sigma_raw, "deep kernel sigma_raw");
  if (!(d.eps_floor > 0.0 && d.eps_floor <= 1.0)) {
    throw ConfigError("deep kernel eps_floor must lie in (0, 1]");
  }
}

double gaussian_kernel(std::span<const double> a, std::span<const double> b,
                       double sigma) {
  check_sigma(sigma, "gaussian kernel sigma");
  if (a.size() != b.size()) {
    throw ShapeError("gaussian_kernel: row widths differ");
  }
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d2 += diff * diff;
  }
  return std::exp(-gamma_of(sigma) * d2);
}

double kernel_value(const KernelSpec& spec, std::span<const double> a,
                    std::span<const double> b) {
  validate_kernel(spec);
  if (const auto* g = std::get_if<GaussianKernel>(&spec)) {
    return gaussian_kernel(a, b, g->sigma);
  }
  const auto& d = std::get<DeepKernel>(spec);
  if (a.size() != d.phi->input_width()) {
    throw ShapeError("deep_kernel: row width does not match feature map");
  }
  Matrix ra(1, a.size(), std::vector<double>(a.begin(), a.end()));
  Matrix rb(1, b.size(), std::vector<double>(b.begin(), b.end()));
  const Matrix fa = feature_map(d, ra);
  const Matrix fb = feature_map(d, rb);
  const double kf = gaussian_kernel(fa.row_span(0), fb.row_span(0),
                                    d.sigma_feature);
  const double kr = gaussian_kernel(a, b, d.sigma_raw);
  return ((1.0 - d.eps_floor) * kf + d.eps_floor) * kr;
}

Matrix kernel_gram(const KernelSpec& spec, const Matrix& a, const Matrix& b) {
  validate_kernel(spec);
  if (const auto* d = std::get_if<DeepKernel>(&spec)) {
    const Matrix fa = feature_map(*d, a);
    const Matrix fb = feature_map(*d, b);
    return gram_parts(spec, a, b, &fa, &fb).combined;
  }
  return gram_parts(spec, a, b, nullptr, nullptr).combined;
}

double mmd2_unbiased(const Matrix& a, const Matrix& b,
                     const KernelSpec& spec) {
  validate_kernel(spec);
  check_mmd_inputs(a, b);
  if (const auto* d = std::get_if<DeepKernel>(&spec)) {
    const Matrix fa = feature_map(*d, a);
    const Matrix fb = feature_map(*d, b);
    const Matrix gaa = gram_parts(spec, a, a, &fa, &fa).combined;
    const Matrix gbb = gram_parts(spec, b, b, &fb, &fb).combined;
    const Matrix gab = gram_parts(spec, a, b, &fa, &fb).combined;
    return u_statistic_from_grams(gaa, gbb, gab);
  }
  const Matrix gaa = gram_parts(spec, a, a, nullptr, nullptr).combined;
  const Matrix gbb = gram_parts(spec, b, b, nullptr, nullptr).combined;
  const Matrix gab = gram_parts(spec, a, b, nullptr, nullptr).combined;
  return u_statistic_from_grams(gaa, gbb, gab);
}

namespace {

// Accumulates the gaussian-kernel gradient sum
//   grad_u[i] += sum_j w_ij * g_ij * (v_j - u_i) / sigma^2
// into `grad` for every row of U, where g is the gram over (U, V) and w is
// the U-statistic weight pattern. `skip_diag` marks within-set terms.
void accumulate_gauss_grad(const Matrix& u, const Matrix& v, const Matrix& g,
                           double weight, double sigma, bool skip_diag,
                           Matrix& grad) {
  const double inv_s2 = 1.0 / (sigma * sigma);
  for (std::size_t i = 0; i < u.rows(); ++i) {
    const double* ui = u.row(i);
    double* gi = grad.row(i);
    for (std::size_t j = 0; j < v.rows(); ++j) {
      if (skip_diag && i == j) continue;
      const double* vj = v.row(j);
      const double c = weight * g(i, j) * inv_s2;
      for (std::size_t k = 0; k < u.cols(); ++k) {
        gi[k] += c * (vj[k] - ui[k]);
      }
    }
  }
}

// Deep-kernel variant: accumulates the raw-space part into grad_raw and the
// feature-space part into grad_feat (to be backpropagated through phi once).
void accumulate_deep_grad(const Matrix& u, const Matrix& v, const Matrix& fu,
                          const Matrix& fv, const GramParts& parts,
                          double weight, const DeepKernel& d, bool skip_diag,
                          Matrix& grad_raw, Matrix& grad_feat) {
  const double inv_sr2 = 1.0 / (d.sigma_raw * d.sigma_raw);
  const double inv_sf2 = 1.0 / (d.sigma_feature * d.sigma_feature);
  const double one_m_eps = 1.0 - d.eps_floor;
  for (std::size_t i = 0; i < u.rows(); ++i) {
    const double* ui = u.row(i);
    const double* fui = fu.row(i);
    double* gri = grad_raw.row(i);
    double* gfi = grad_feat.row(i);
    for (std::size_t j = 0; j < v.rows(); ++j) {
      if (skip_diag && i == j) continue;
      const double* vj = v.row(j);
      const double* fvj = fv.row(j);
      const double k_full = parts.combined(i, j);
      const double c_raw = weight * k_full * inv_sr2;
      for (std::size_t k = 0; k < u.cols(); ++k) {
        gri[k] += c_raw * (vj[k] - ui[k]);
      }
      const double c_feat =
          weight * one_m_eps * parts.feature(i, j) * parts.raw(i, j) * inv_sf2;
      for (std::size_t k = 0; k < fu.cols(); ++k) {
        gfi[k] += c_feat * (fvj[k] - fui[k]);
      }
    }
  }
}

}  // namespace

Mmd2WithGrad mmd2_unbiased_with_grad(const Matrix& a, const Matrix& b,
                                     const KernelSpec& spec) {
  validate_kernel(spec);
  check_mmd_inputs(a, b);
  const double n = static_cast<double>(a.rows());
  const double m = static_cast<double>(b.rows());
  const double w_aa = 2.0 / (n * (n - 1.0));  // symmetric pairs counted once
  const double w_bb = 2.0 / (m * (m - 1.0));
  const double w_ab = -2.0 / (n * m);

  Mmd2WithGrad out;
  out.grad_a = Matrix(a.rows(), a.cols());
  out.grad_b = Matrix(b.rows(), b.cols());

  if (const auto* g = std::get_if<GaussianKernel>(&spec)) {
    const GramParts gaa = gram_parts(spec, a, a, nullptr, nullptr);
    const GramParts gbb = gram_parts(spec, b, b, nullptr, nullptr);
    const GramParts gab = gram_parts(spec, a, b, nullptr, nullptr);
    out.value = u_statistic_from_grams(gaa.combined, gbb.combined,
                                       gab.combined);
    accumulate_gauss_grad(a, a, gaa.combined, w_aa, g->sigma, true, out.grad_a);
    accumulate_gauss_grad(a, b, gab.combined, w_ab, g->sigma, false,
                          out.grad_a);
    accumulate_gauss_grad(b, b, gbb.combined, w_bb, g->sigma, true, out.grad_b);
    // k(a_i, b_j) seen from the b side: transpose the cross gram.
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double* gj = out.grad_b.row(j);
      const double* bj = b.row(j);
      const double inv_s2 = 1.0 / (g->sigma * g->sigma);
      for (std::size_t i = 0; i < a.rows(); ++i) {
        const double c = w_ab * gab.combined(i, j) * inv_s2;
        const double* ai = a.row(i);
        for (std::size_t k = 0; k < b.cols(); ++k) {
          gj[k] += c * (ai[k] - bj[k]);
        }
      }
    }
    return out;
  }

  const auto& d = std::get<DeepKernel>(spec);
  const Matrix fa = feature_map(d, a);
  const Matrix fb = feature_map(d, b);
  const GramParts gaa = gram_parts(spec, a, a, &fa, &fa);
  const GramParts gbb = gram_parts(spec, b, b, &fb, &fb);
  const GramParts gab = gram_parts(spec, a, b, &fa, &fb);
  out.value = u_statistic_from_grams(gaa.combined, gbb.combined, gab.combined);

  Matrix feat_grad_a(fa.rows(), fa.cols());
  Matrix feat_grad_b(fb.rows(), fb.cols());
  accumulate_deep_grad(a, a, fa, fa, gaa, w_aa, d, true, out.grad_a,
                       feat_grad_a);
  accumulate_deep_grad(a, b, fa, fb, gab, w_ab, d, false, out.grad_a,
                       feat_grad_a);
  accumulate_deep_grad(b, b, fb, fb, gbb, w_bb, d, true, out.grad_b,
                       feat_grad_b);

  // Cross term from the b side, mirrored.
  {
    const double inv_sr2 = 1.0 / (d.sigma_raw * d.sigma_raw);
    const double inv_sf2 = 1.0 / (d.sigma_feature * d.sigma_feature);
    const double one_m_eps = 1.0 - d.eps_floor;
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double* grj = out.grad_b.row(j);
      double* gfj = feat_grad_b.row(j);
      const double* bj = b.row(j);
      const double* fbj = fb.row(j);
      for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        const double* fai = fa.row(i);
        const double c_raw = w_ab * gab.combined(i, j) * inv_sr2;
        for (std::size_t k = 0; k < b.cols(); ++k) {
          grj[k] += c_raw * (ai[k] - bj[k]);
        }
        const double c_feat = w_ab * one_m_eps * gab.feature(i, j) *
                              gab.raw(i, j) * inv_sf2;
        for (std::size_t k = 0; k < fb.cols(); ++k) {
          gfj[k] += c_feat * (fai[k] - fbj[k]);
        }
      }
    }
  }

  // One backward pass per side folds the feature-space gradients into
  // input space through phi.
  {
    const ForwardCache ca = net_forward(*d.phi, a);
    const NetGrads na = net_backward(*d.phi, ca, feat_grad_a);
    for (std::size_t i = 0; i < out.grad_a.size(); ++i) {
      out.grad_a.data()[i] += na.input.data()[i];
    }
    const ForwardCache cb = net_forward(*d.phi, b);
    const NetGrads nb = net_backward(*d.phi, cb, feat_grad_b);
    for (std::size_t i = 0; i < out.grad_b.size(); ++i) {
      out.grad_b.data()[i] += nb.input.data()[i];
    }
  }
  return out;
}

std::vector<double> mmd2_phi_param_grad(const Matrix& a, const Matrix& b,
                                        const DeepKernel& d) {
  KernelSpec spec = d;
  validate_kernel(spec);
  check_mmd_inputs(a, b);
  const double n = static_cast<double>(a.rows());
  const double m = static_cast<double>(b.rows());

  const ForwardCache ca = net_forward(*d.phi, a);
  const ForwardCache cb = net_forward(*d.phi, b);
  const Matrix& fa = ca.output();
  const Matrix& fb = cb.output();
  const GramParts gaa = gram_parts(spec, a, a, &fa, &fa);
  const GramParts gbb = gram_parts(spec, b, b, &fb, &fb);
  const GramParts gab = gram_parts(spec, a, b, &fa, &fb);

  Matrix feat_grad_a(fa.rows(), fa.cols());
  Matrix feat_grad_b(fb.rows(), fb.cols());
  Matrix unused_a(a.rows(), a.cols());
  Matrix unused_b(b.rows(), b.cols());
  accumulate_deep_grad(a, a, fa, fa, gaa, 2.0 / (n * (n - 1.0)), d, true,
                       unused_a, feat_grad_a);
  accumulate_deep_grad(a, b, fa, fb, gab, -2.0 / (n * m), d, false, unused_a,
                       feat_grad_a);
  accumulate_deep_grad(b, b, fb, fb, gbb, 2.0 / (m * (m - 1.0)), d, true,
                       unused_b, feat_grad_b);
  {
    const double inv_sf2 = 1.0 / (d.sigma_feature * d.sigma_feature);
    const double one_m_eps = 1.0 - d.eps_floor;
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double* gfj = feat_grad_b.row(j);
      const double* fbj = fb.row(j);
      for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* fai = fa.row(i);
        const double c_feat = -2.0 / (n * m) * one_m_eps * gab.feature(i, j) *
                              gab.raw(i, j) * inv_sf2;
        for (std::size_t k = 0; k < fb.cols(); ++k) {
          gfj[k] += c_feat * (fai[k] - fbj[k]);
        }
      }
    }
  }

  const NetGrads ga = net_backward(*d.phi, ca, feat_grad_a);
  const NetGrads gb = net_backward(*d.phi, cb, feat_grad_b);
  std::vector<double> flat = ga.flat();
  const std::vector<double> flat_b = gb.flat();
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += flat_b[i];
  return flat;
}

double median_heuristic(const Matrix& rows) {
  if (rows.rows() < 2) {
    throw InsufficientSamplesError("median_heuristic needs at least 2 rows");
  }
  constexpr std::size_t kCap = 1000;
  Matrix sub;
  const Matrix* use = &rows;
  if (rows.rows() > kCap) {
    std::vector<std::size_t> idx(kCap);
    for (std::size_t i = 0; i < kCap; ++i) idx[i] = i * rows.rows() / kCap;
    sub = rows.take_rows(idx);
    use = &sub;
  }
  const Matrix d2 = kernels::sqdist(*use, *use);
  std::vector<double> dist;
  dist.reserve(use->rows() * (use->rows() - 1) / 2);
  for (std::size_t i = 0; i < use->rows(); ++i) {
    for (std::size_t j = i + 1; j < use->rows(); ++j) {
      dist.push_back(std::sqrt(d2(i, j)));
    }
  }
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + mid, dist.end());
  double med = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower =
        *std::max_element(dist.begin(), dist.begin() + mid);
    med = 0.5 * (lower + med);
  }
  if (med > 0.0) return med;
  double mean = 0.0;
  for (double v : dist) mean += v;
  mean /= static_cast<double>(dist.size());
  return mean > 0.0 ? mean : 1.0;
}

namespace {

double joint_vs_product_stat(const PairedSamples& s, const KernelSpec& spec,
                             SeededRng& rng) {
  const Matrix joint = hcat(s.x, s.y);
  const PairedSamples product = shuffle_product_marginals(s, rng);
  const Matrix prod_rows = hcat(product.x, product.y);
  return mmd2_unbiased(joint, prod_rows, spec);
}

}  // namespace

DependenceEstimate mmd_dependence(const PairedSamples& s,
                                  const KernelSpec& spec, SeededRng& rng,
                                  int n_shuffles) {
  if (n_shuffles < 1) throw ConfigError("n_shuffles must be at least 1");
  validate_kernel(spec);
  double total = 0.0;
  for (int k = 0; k < n_shuffles; ++k) {
    total += joint_vs_product_stat(s, spec, rng);
  }
  const double value = total / n_shuffles;
  if (!std::isfinite(value) || value < -0.5) {
    throw NumericError("mmd dependence outside sanity bounds: " +
                       std::to_string(value));
  }
  return DependenceEstimate{value, s.n(), Measure::Mmd};
}

double permutation_pvalue(const PairedSamples& s, const KernelSpec& spec,
                          SeededRng& rng, int n_perm) {
  if (n_perm < 19) throw ConfigError("permutation test needs n_perm >= 19");
  validate_kernel(spec);
  SeededRng obs_rng = rng.split("observed");
  const double observed = joint_vs_product_stat(s, spec, obs_rng);
  int count = 0;
  for (int k = 0; k < n_perm; ++k) {
    SeededRng perm_rng = rng.split("null-perm", static_cast<std::uint64_t>(k));
    const std::vector<std::size_t> perm = random_permutation(s.n(), perm_rng);
    const PairedSamples null_s(s.x, s.y.take_rows(perm));
    SeededRng stat_rng = rng.split("null-stat", static_cast<std::uint64_t>(k));
    if (joint_vs_product_stat(null_s, spec, stat_rng) >= observed) ++count;
  }
  return static_cast<double>(1 + count) / static_cast<double>(n_perm + 1);
}

}  // namespace synfuse
