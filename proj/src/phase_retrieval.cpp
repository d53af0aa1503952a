#include "qsense/phase_retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "qsense/error.hpp"
#include "qsense/random.hpp"

namespace qsense::pr {

using sensing::EnsembleMode;
using sensing::NoiseKind;

namespace {
constexpr std::uint64_t kPrTag = 3;
}

double pr_entry(std::uint64_t seed, std::size_t i, std::size_t c) noexcept {
  return gaussian_entry(seed, kPrTag, i, 0, c);
}

PRInstance make_pr_instance(std::size_t n, std::size_t m, std::vector<double> a, DenseVector x0,
                            std::vector<double> noise, double sigma, NoiseKind noise_kind,
                            std::uint64_t seed) {
  if (n == 0 || m == 0) throw InvalidArgument("PR instance: n and m must be positive");
  if (a.size() != m * n) throw InvalidArgument("PR instance: expected m*n vector entries");
  if (x0.size() != n) throw InvalidArgument("PR instance: signal length mismatch");
  if (noise.size() != m) throw InvalidArgument("PR instance: noise length mismatch");
  PRInstance inst{n,     x0.nnz(),   m,  std::move(x0),  0.0, sigma, noise_kind, std::move(noise),
                  {},    std::move(a), EnsembleMode::materialized, seed};
  const double nx = inst.x0.norm();
  inst.mu0 = nx > 0.0 ? inst.x0.norm_inf() / nx : 0.0;
  inst.b.resize(m);
  for (std::size_t i = 0; i < m; ++i) inst.b[i] = pr_measure(inst, inst.x0, i) + inst.noise[i];
  return inst;
}

PRInstance generate_pr_instance(std::size_t n, std::size_t k, std::size_t m, double mu0_target,
                                double sigma, NoiseKind noise_kind,
                                std::optional<EnsembleMode> mode, std::uint64_t seed) {
  if (m == 0) throw InvalidArgument("m must be positive");
  if (k == 0 || k > n) throw InvalidArgument("need 1 <= k <= n");
  DenseVector x0 = sensing::spike_signal(n, k, mu0_target, seed);
  std::vector<double> a(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < n; ++c) a[i * n + c] = pr_entry(seed, i, c);
  }
  auto noise = sensing::draw_noise(m, sigma, noise_kind, seed);
  PRInstance inst = make_pr_instance(n, m, std::move(a), std::move(x0), std::move(noise), sigma,
                                     noise_kind, seed);
  inst.mode = mode.value_or(EnsembleMode::materialized);
  inst.mu0_target = mu0_target;
  return inst;
}

double pr_measure(const PRInstance& inst, const DenseVector& x, std::size_t i) {
  if (x.size() != inst.n) throw InvalidArgument("pr_measure: length mismatch");
  const double* ai = inst.vec(i);
  double s = 0.0;
  for (std::size_t c = 0; c < inst.n; ++c) s += ai[c] * x[c];
  return s * s;
}

DenseVector pivot_scores(const PRInstance& inst) {
  std::vector<double> d(inst.n, 0.0);
  for (std::size_t i = 0; i < inst.m; ++i) {
    const double* ai = inst.vec(i);
    for (std::size_t l = 0; l < inst.n; ++l) d[l] += ai[l] * ai[l] * inst.b[i];
  }
  for (double& v : d) v /= static_cast<double>(inst.m);
  return DenseVector(std::move(d));
}

std::size_t pr_pivot(const PRInstance& inst) {
  const DenseVector d = pivot_scores(inst);
  std::size_t p = 0;
  for (std::size_t l = 1; l < d.size(); ++l) {
    if (d[l] > d[p]) p = l;
  }
  return p;
}

DenseVector pr_correlation(const PRInstance& inst, std::size_t pivot) {
  if (pivot >= inst.n) throw InvalidArgument("pr_correlation: pivot out of range");
  std::vector<double> v(inst.n, 0.0);
  for (std::size_t i = 0; i < inst.m; ++i) {
    const double* ai = inst.vec(i);
    const double w = inst.b[i] * ai[pivot];
    for (std::size_t l = 0; l < inst.n; ++l) v[l] += w * ai[l];
  }
  for (double& x : v) x /= static_cast<double>(inst.m);
  return DenseVector(std::move(v));
}

double pr_phi(const PRInstance& inst) {
  double s = 0.0;
  for (double v : inst.b) s += v;
  return std::sqrt(std::max(s / static_cast<double>(inst.m), 0.0));
}

double pr_support_threshold(std::size_t m, std::size_t k, double c_thr, double phi_sq) {
  const double md = static_cast<double>(m);
  const double lm = std::log(md);
  const double lk = std::log(static_cast<double>(std::max<std::size_t>(k, 2)));
  return c_thr * std::sqrt(lm * lm * lm * lm * lk * lk / md) * phi_sq;
}

IndexSet pr_support_from(const DenseVector& vhat, std::size_t pivot, std::size_t m, std::size_t k,
                         double c_thr, double phi_sq) {
  if (pivot >= vhat.size()) throw InvalidArgument("pr_support: pivot out of range");
  if (!(c_thr >= 0.0)) throw InvalidArgument("pr_support: C_thr must be non-negative");
  if (m == 0) throw InvalidArgument("pr_support: m must be positive");
  const double thr = pr_support_threshold(m, k, c_thr, phi_sq);
  std::vector<std::size_t> keep{pivot};
  for (std::size_t l = 0; l < vhat.size(); ++l) {
    if (l != pivot && std::abs(vhat[l]) > thr) keep.push_back(l);
  }
  return IndexSet(vhat.size(), std::move(keep));
}

IndexSet pr_support(const PRInstance& inst, std::size_t pivot, double c_thr) {
  const double phi = pr_phi(inst);
  return pr_support_from(pr_correlation(inst, pivot), pivot, inst.m, inst.k, c_thr, phi * phi);
}

DenseSymMatrix pr_spectral_matrix(const PRInstance& inst, const IndexSet& support) {
  if (support.empty()) throw InvalidArgument("pr_spectral: empty support");
  if (support.indices().back() >= inst.n) throw InvalidArgument("pr_spectral: index out of range");
  const std::size_t s = support.size();
  std::vector<double> mat(s * s, 0.0), as(s);
  for (std::size_t i = 0; i < inst.m; ++i) {
    const double* ai = inst.vec(i);
    for (std::size_t j = 0; j < s; ++j) as[j] = ai[support[j]];
    const double bi = inst.b[i];
    for (std::size_t r = 0; r < s; ++r) {
      const double w = bi * as[r];
      for (std::size_t c = 0; c < s; ++c) mat[r * s + c] += w * as[c];
    }
  }
  for (double& v : mat) v /= static_cast<double>(inst.m);
  return DenseSymMatrix(s, std::move(mat));
}

init::InitEstimate pr_estimate_from_matrix(const DenseSymMatrix& mat, const IndexSet& support,
                                           std::size_t pivot, double pivot_value, double phi) {
  if (mat.dim() != support.size()) throw InvalidArgument("pr_spectral: matrix/support mismatch");
  const EigenPair ep = top_eigpair(mat);
  DenseVector sub(support.size());
  for (std::size_t j = 0; j < support.size(); ++j) sub[j] = phi * ep.vector[j];
  DenseVector x = embed(sub, support);
  canonicalize_sign(x);
  return {pivot, pivot_value, support, std::move(x), phi};
}

init::InitEstimate pr_spectral(const PRInstance& inst, const IndexSet& support, std::size_t pivot) {
  const DenseVector scores = pivot_scores(inst);
  const double phi = pr_phi(inst);
  double pivot_value = 0.0;
  if (pivot < inst.n) pivot_value = std::sqrt(std::max((scores[pivot] - phi * phi) / 2.0, 0.0));
  return pr_estimate_from_matrix(pr_spectral_matrix(inst, support), support, pivot, pivot_value,
                                 phi);
}

init::InitEstimate pr_initialize(const PRInstance& inst, double c_thr) {
  const std::size_t p = pr_pivot(inst);
  const IndexSet s = pr_support(inst, p, c_thr);
  return pr_spectral(inst, s, p);
}

}  // namespace qsense::pr
