#pragma once

// Spectral initialization for sparse quadratic measurements: diagonal pivot,
// pivot-column correlation, support thresholding, restricted top eigenvector.

#include <cstddef>
#include <span>

#include "qsense/linalg.hpp"
#include "qsense/sensing.hpp"

namespace qsense::init {

struct InitEstimate {
  std::size_t pivot;
  double pivot_value;  // estimate of |x0[pivot]|
  IndexSet support;
  DenseVector x_init;
  double phi;  // spectral scale
};

inline constexpr double kDefaultCThr = 3.0;

/// xhat[l] = (1/m) sum_i A_i[l,l] b_i.
DenseVector diag_estimate(const sensing::ProblemInstance& inst);
DenseVector diag_estimate(sensing::EnsembleAccess& acc, std::span<const double> b);

struct Pivot {
  std::size_t index;
  double value;
};
/// argmax of diag (lowest index on ties) and sqrt(max(diag[p], 0)).
/// Throws DegenerateInstance when no entry is positive.
Pivot select_pivot(const DenseVector& diag);

/// yhat = (1/m) sum_i b_i A_i[:, pivot].
DenseVector column_estimate(const sensing::ProblemInstance& inst, std::size_t pivot);
DenseVector column_estimate(sensing::EnsembleAccess& acc, std::span<const double> b,
                            std::size_t pivot);

/// sqrt(max(mean(b^2) - noise variance, 0)); estimates ||x0||^2.
double norm_estimate(const sensing::ProblemInstance& inst);
double norm_estimate(std::span<const double> b, double noise_variance);

/// Threshold C_thr * sqrt(log m / m) * norm_sq_est used by support_select.
double support_threshold(double norm_sq_est, std::size_t m, double c_thr);

/// {l : |yhat[l]| > support_threshold(...)}. Throws DegenerateSupport if empty.
IndexSet support_select(const DenseVector& yhat, double norm_sq_est, std::size_t m, double c_thr);

/// (1/m) sum_i b_i ((A_i + A_i^T)/2) restricted to S x S.
DenseSymMatrix spectral_matrix(sensing::EnsembleAccess& acc, std::span<const double> b,
                               const IndexSet& support);

/// Top eigenpair of a given |S| x |S| spectral matrix turned into an estimate:
/// x_init = phi * v embedded, phi = sqrt(|lambda|), pivot coordinate replaced
/// by sign(v[pivot]) * pivot_value when the pivot is in S.
InitEstimate estimate_from_matrix(const DenseSymMatrix& mat, const IndexSet& support,
                                  std::size_t pivot, double pivot_value);

InitEstimate spectral_init(const sensing::ProblemInstance& inst, const IndexSet& support,
                           std::size_t pivot, double pivot_value);
InitEstimate spectral_init(sensing::EnsembleAccess& acc, std::span<const double> b,
                           const IndexSet& support, std::size_t pivot, double pivot_value);

InitEstimate initialize(const sensing::ProblemInstance& inst, double c_thr = kDefaultCThr);
InitEstimate initialize(sensing::EnsembleAccess& acc, const sensing::ProblemInstance& inst,
                        double c_thr = kDefaultCThr);

}  // namespace qsense::init
