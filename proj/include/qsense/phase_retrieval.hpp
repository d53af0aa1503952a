#pragma once

// Sparse phase retrieval b_i = <a_i, x0>^2 + eps_i and its spectral initializer.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "qsense/init_quadratic.hpp"
#include "qsense/linalg.hpp"
#include "qsense/sensing.hpp"

namespace qsense::pr {

/// Sensing vectors are always held in memory (m x n, row-major); mode only
/// decides whether a saved file carries them or regenerates them from the seed.
struct PRInstance {
  std::size_t n;
  std::size_t k;
  std::size_t m;
  DenseVector x0;
  double mu0;
  double sigma;
  sensing::NoiseKind noise_kind;
  std::vector<double> noise;
  std::vector<double> b;
  std::vector<double> a;
  sensing::EnsembleMode mode;
  std::uint64_t seed;
  double mu0_target = 0.0;

  const double* vec(std::size_t i) const noexcept { return a.data() + i * n; }
};

/// Entry c of a_i; a pure function of (seed, i, c).
double pr_entry(std::uint64_t seed, std::size_t i, std::size_t c) noexcept;

PRInstance generate_pr_instance(std::size_t n, std::size_t k, std::size_t m, double mu0_target,
                                double sigma, sensing::NoiseKind noise_kind,
                                std::optional<sensing::EnsembleMode> mode, std::uint64_t seed);

/// Rebuild an instance from explicit vectors and signal (b computed, noise added).
PRInstance make_pr_instance(std::size_t n, std::size_t m, std::vector<double> a, DenseVector x0,
                            std::vector<double> noise, double sigma,
                            sensing::NoiseKind noise_kind, std::uint64_t seed = 0);

/// <a_i, x>^2 in a fixed summation order.
double pr_measure(const PRInstance& inst, const DenseVector& x, std::size_t i);

/// (1/m) sum_i a_i[l]^2 b_i for every l.
DenseVector pivot_scores(const PRInstance& inst);
/// argmax of pivot_scores, lowest index on ties.
std::size_t pr_pivot(const PRInstance& inst);

/// vhat[l] = (1/m) sum_i b_i a_i[pivot] a_i[l].
DenseVector pr_correlation(const PRInstance& inst, std::size_t pivot);

/// phi = sqrt(max(mean(b), 0)); symmetric noise needs no mean correction.
double pr_phi(const PRInstance& inst);

inline constexpr double kDefaultPrCThr = 0.15;

/// C_thr * sqrt(log^4(m) log^2(max(k,2)) / m) * phi^2.
double pr_support_threshold(std::size_t m, std::size_t k, double c_thr, double phi_sq);

/// {l != pivot : |vhat[l]| > threshold} u {pivot}.
IndexSet pr_support_from(const DenseVector& vhat, std::size_t pivot, std::size_t m, std::size_t k,
                         double c_thr, double phi_sq);
IndexSet pr_support(const PRInstance& inst, std::size_t pivot, double c_thr = kDefaultPrCThr);

/// (1/m) sum_i b_i (a_i)_S (a_i)_S^T.
DenseSymMatrix pr_spectral_matrix(const PRInstance& inst, const IndexSet& support);

/// x_init = phi * v embedded from S, v the unit top eigenvector (canonical sign).
init::InitEstimate pr_estimate_from_matrix(const DenseSymMatrix& mat, const IndexSet& support,
                                           std::size_t pivot, double pivot_value, double phi);
init::InitEstimate pr_spectral(const PRInstance& inst, const IndexSet& support, std::size_t pivot);

init::InitEstimate pr_initialize(const PRInstance& inst, double c_thr = kDefaultPrCThr);

}  // namespace qsense::pr
