#include "qsense/init_quadratic.hpp"

#include <cmath>

#include "qsense/error.hpp"

namespace qsense::init {

using sensing::EnsembleAccess;
using sensing::ProblemInstance;

namespace {

void check_b(const EnsembleAccess& acc, std::span<const double> b) {
  if (b.size() != acc.m()) throw InvalidArgument("measurement count mismatch");
}

}  // namespace

DenseVector diag_estimate(EnsembleAccess& acc, std::span<const double> b) {
  check_b(acc, b);
  const std::size_t n = acc.n(), m = acc.m();
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < n; ++l) d[l] += acc.entry(i, l, l) * b[i];
  }
  for (double& v : d) v /= static_cast<double>(m);
  return DenseVector(std::move(d));
}

DenseVector diag_estimate(const ProblemInstance& inst) {
  EnsembleAccess acc(inst.ensemble, 0);
  return diag_estimate(acc, inst.b);
}

Pivot select_pivot(const DenseVector& diag) {
  std::size_t p = 0;
  for (std::size_t l = 1; l < diag.size(); ++l) {
    if (diag[l] > diag[p]) p = l;
  }
  if (!(diag[p] > 0.0)) {
    throw DegenerateInstance("no positive diagonal correlation; cannot choose a pivot");
  }
  return {p, std::sqrt(diag[p])};
}

DenseVector column_estimate(EnsembleAccess& acc, std::span<const double> b, std::size_t pivot) {
  check_b(acc, b);
  const std::size_t n = acc.n(), m = acc.m();
  if (pivot >= n) throw InvalidArgument("column_estimate: pivot out of range");
  std::vector<double> y(n, 0.0), scratch(n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* c = acc.col(i, pivot, scratch.data());
    for (std::size_t l = 0; l < n; ++l) y[l] += b[i] * c[l];
  }
  for (double& v : y) v /= static_cast<double>(m);
  return DenseVector(std::move(y));
}

DenseVector column_estimate(const ProblemInstance& inst, std::size_t pivot) {
  EnsembleAccess acc(inst.ensemble, 0);
  return column_estimate(acc, inst.b, pivot);
}

double norm_estimate(std::span<const double> b, double noise_variance) {
  if (b.empty()) throw InvalidArgument("norm_estimate: no measurements");
  double s = 0.0;
  for (double v : b) s += v * v;
  return std::sqrt(std::max(s / static_cast<double>(b.size()) - noise_variance, 0.0));
}

double norm_estimate(const ProblemInstance& inst) {
  return norm_estimate(inst.b, sensing::noise_variance(inst.noise_kind, inst.sigma));
}

double support_threshold(double norm_sq_est, std::size_t m, double c_thr) {
  const double md = static_cast<double>(m);
  return c_thr * std::sqrt(std::log(md) / md) * norm_sq_est;
}

IndexSet support_select(const DenseVector& yhat, double norm_sq_est, std::size_t m, double c_thr) {
  if (!(norm_sq_est > 0.0)) throw InvalidArgument("support_select: norm estimate must be positive");
  if (!(c_thr > 0.0)) throw InvalidArgument("support_select: C_thr must be positive");
  if (m == 0) throw InvalidArgument("support_select: m must be positive");
  const double thr = support_threshold(norm_sq_est, m, c_thr);
  std::vector<std::size_t> keep;
  for (std::size_t l = 0; l < yhat.size(); ++l) {
    if (std::abs(yhat[l]) > thr) keep.push_back(l);
  }
  if (keep.empty()) {
    throw DegenerateSupport("support threshold kept no index (lower C_thr or raise m)");
  }
  return IndexSet(yhat.size(), std::move(keep));
}

DenseSymMatrix spectral_matrix(EnsembleAccess& acc, std::span<const double> b,
                               const IndexSet& support) {
  check_b(acc, b);
  if (support.empty()) throw InvalidArgument("spectral_matrix: empty support");
  if (support.indices().back() >= acc.n()) throw InvalidArgument("spectral_matrix: index out of range");
  const std::size_t s = support.size(), m = acc.m();
  std::vector<double> acc_m(s * s, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t a = 0; a < s; ++a) {
      for (std::size_t c = 0; c < s; ++c) {
        acc_m[a * s + c] += b[i] * acc.entry(i, support[a], support[c]);
      }
    }
  }
  for (double& v : acc_m) v /= static_cast<double>(m);
  // The constructor symmetrizes, which realizes (A + A^T)/2.
  return DenseSymMatrix(s, std::move(acc_m));
}

InitEstimate estimate_from_matrix(const DenseSymMatrix& mat, const IndexSet& support,
                                  std::size_t pivot, double pivot_value) {
  if (support.empty()) throw InvalidArgument("spectral_init: empty support");
  if (mat.dim() != support.size()) throw InvalidArgument("spectral_init: matrix/support mismatch");
  const EigenPair ep = top_eigpair(mat);
  const double phi = std::sqrt(std::abs(ep.value));
  DenseVector sub(support.size());
  for (std::size_t j = 0; j < support.size(); ++j) sub[j] = phi * ep.vector[j];
  const std::size_t pos = support.position(pivot);
  if (pos < support.size()) sub[pos] = std::copysign(pivot_value, ep.vector[pos]);
  DenseVector x = embed(sub, support);
  canonicalize_sign(x);
  return {pivot, pivot_value, support, std::move(x), phi};
}

InitEstimate spectral_init(EnsembleAccess& acc, std::span<const double> b, const IndexSet& support,
                           std::size_t pivot, double pivot_value) {
  return estimate_from_matrix(spectral_matrix(acc, b, support), support, pivot, pivot_value);
}

InitEstimate spectral_init(const ProblemInstance& inst, const IndexSet& support, std::size_t pivot,
                           double pivot_value) {
  EnsembleAccess acc(inst.ensemble, 0);
  return spectral_init(acc, inst.b, support, pivot, pivot_value);
}

InitEstimate initialize(EnsembleAccess& acc, const ProblemInstance& inst, double c_thr) {
  const DenseVector d = diag_estimate(acc, inst.b);
  const Pivot p = select_pivot(d);
  const DenseVector y = column_estimate(acc, inst.b, p.index);
  const double nrm = norm_estimate(inst);
  if (!(nrm > 0.0)) throw DegenerateInstance("measurement energy does not exceed the noise level");
  const IndexSet s = support_select(y, nrm, inst.m, c_thr);
  return spectral_init(acc, inst.b, s, p.index, p.value);
}

InitEstimate initialize(const ProblemInstance& inst, double c_thr) {
  EnsembleAccess acc(inst.ensemble);
  return initialize(acc, inst, c_thr);
}

}  // namespace qsense::init
