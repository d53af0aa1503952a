#pragma once

// Truncated gradient descent: x+ = T_{eta tau(x)}(x - eta grad R(x)) with soft
// thresholding and a data-driven threshold tau(x).

#include <cstddef>

#include "qsense/linalg.hpp"
#include "qsense/sensing.hpp"
#include "qsense/trace.hpp"

namespace qsense::tgd {

struct TGDConfig {
  double eta = 0.04;
  double C_tau = 2.0;
  std::size_t T_max = 1000;
  double tol = 1e-10;
  bool track_errors = true;
  /// Requires 0 < eta < 1/20 and C_tau > 0.
  void validate() const;
};

/// Risk is declared divergent once it exceeds this multiple of the initial risk.
inline constexpr double kDivergenceFactor = 1e6;

/// tau from precomputed pieces: sqrt(C log(mn)/m^2 * residual_sq_sum * norm_sq).
double tau_formula(double residual_sq_sum, double norm_sq, std::size_t m, std::size_t n,
                   double c_tau);
double tau(const sensing::ProblemInstance& inst, const DenseVector& x, double c_tau);

/// soft_threshold(x - eta * grad, eta * tau(x)). Any eta >= 0 is accepted here.
DenseVector tgd_step(const sensing::ProblemInstance& inst, const DenseVector& x,
                     const TGDConfig& config);

/// Iterates until ||x+ - x|| < tol or T_max steps. Throws Divergence (with the
/// trace so far) when the risk exceeds kDivergenceFactor times the initial risk.
RecoveryTrace tgd_run(const sensing::ProblemInstance& inst, const DenseVector& x_init,
                      const TGDConfig& config = {});
RecoveryTrace tgd_run(sensing::EnsembleAccess& acc, const sensing::ProblemInstance& inst,
                      const DenseVector& x_init, const TGDConfig& config = {});

}  // namespace qsense::tgd
