#pragma once

// Sparse power factorization: relinearize at the current unit iterate, solve
// the sparse linear problem with iterative hard thresholding, normalize.

#include <cstddef>
#include <span>
#include <vector>

#include "qsense/linalg.hpp"
#include "qsense/sensing.hpp"
#include "qsense/trace.hpp"

namespace qsense::spf {

/// Phi (m x n, row-major) with row i = y^T A_i / sqrt(m), and rhs = b / sqrt(m).
struct LinearizedSystem {
  std::size_t m;
  std::size_t n;
  std::vector<double> rows;
  std::vector<double> rhs;

  double row_dot(std::size_t i, const DenseVector& x) const;
  /// ||Phi x - rhs||^2.
  double loss(const DenseVector& x) const;
};

/// Requires ||y|| = 1 within 1e-12.
LinearizedSystem linearize(const sensing::ProblemInstance& inst, const DenseVector& y);
LinearizedSystem linearize(sensing::EnsembleAccess& acc, std::span<const double> b,
                           const DenseVector& y);

/// L iterations of x <- H_k(x + Phi^T (rhs - Phi x)) from x_start.
DenseVector iht(const LinearizedSystem& sys, std::size_t k, std::size_t iterations,
                const DenseVector& x_start);

struct SPFConfig {
  std::size_t T_max = 50;
  std::size_t L = 25;
  double tol = 1e-10;  // stop once sin(angle between successive iterates) < tol
  bool track_errors = true;
  void validate() const;
};

/// Outer loop. Iterate 0 is x_init / ||x_init||; every stored iterate has unit norm.
/// Throws DegenerateIterate if an inner solve returns the zero vector.
RecoveryTrace spf_run(const sensing::ProblemInstance& inst, const DenseVector& x_init,
                      const SPFConfig& config = {});
RecoveryTrace spf_run(sensing::EnsembleAccess& acc, const sensing::ProblemInstance& inst,
                      const DenseVector& x_init, const SPFConfig& config = {});

}  // namespace qsense::spf
