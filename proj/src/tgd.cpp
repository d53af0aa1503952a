#include "qsense/tgd.hpp"

#include <cmath>
#include <limits>

#include "qsense/error.hpp"

namespace qsense::tgd {

using sensing::EnsembleAccess;
using sensing::ProblemInstance;

void TGDConfig::validate() const {
  if (!(eta > 0.0 && eta < 1.0 / 20.0)) throw InvalidArgument("TGD: eta must lie in (0, 1/20)");
  if (!(C_tau > 0.0)) throw InvalidArgument("TGD: C_tau must be positive");
  if (!(tol >= 0.0)) throw InvalidArgument("TGD: tol must be non-negative");
}

double tau_formula(double residual_sq_sum, double norm_sq, std::size_t m, std::size_t n,
                   double c_tau) {
  const double md = static_cast<double>(m);
  const double mn = md * static_cast<double>(n);
  return std::sqrt(c_tau * std::log(mn) / (md * md) * residual_sq_sum * norm_sq);
}

double tau(const ProblemInstance& inst, const DenseVector& x, double c_tau) {
  EnsembleAccess acc(inst.ensemble, 0);
  const auto r = sensing::residuals(acc, inst.b, x);
  double sq = 0.0;
  for (double v : r) sq += v * v;
  const double nx = x.norm();
  return tau_formula(sq, nx * nx, inst.m, inst.n, c_tau);
}

namespace {

DenseVector step_from(const DenseVector& x, const sensing::RiskAndGradient& rg, std::size_t m,
                      std::size_t n, const TGDConfig& config) {
  const double nx = x.norm();
  const double t = tau_formula(rg.residual_sq_sum, nx * nx, m, n, config.C_tau);
  DenseVector moved = x;
  for (std::size_t i = 0; i < x.size(); ++i) moved[i] -= config.eta * rg.gradient[i];
  return soft_threshold(moved, config.eta * t);
}

}  // namespace

DenseVector tgd_step(const ProblemInstance& inst, const DenseVector& x, const TGDConfig& config) {
  if (!(config.eta >= 0.0)) throw InvalidArgument("tgd_step: eta must be non-negative");
  EnsembleAccess acc(inst.ensemble, 0);
  const auto rg = sensing::risk_and_gradient(acc, inst.b, x);
  return step_from(x, rg, inst.m, inst.n, config);
}

RecoveryTrace tgd_run(EnsembleAccess& acc, const ProblemInstance& inst, const DenseVector& x_init,
                      const TGDConfig& config) {
  config.validate();
  if (x_init.size() != inst.n) throw InvalidArgument("tgd_run: length mismatch");
  RecoveryTrace trace;
  DenseVector x = x_init;
  double risk0 = 0.0;
  for (std::size_t t = 0;; ++t) {
    const auto rg = sensing::risk_and_gradient(acc, inst.b, x);
    if (t == 0) risk0 = rg.risk;
    trace.errors.push_back(config.track_errors ? sign_resolved_error(x, inst.x0)
                                               : std::numeric_limits<double>::quiet_NaN());
    trace.risks.push_back(rg.risk);
    trace.iterates.push_back(x);
    if (!std::isfinite(rg.risk) || (risk0 > 0.0 && rg.risk > kDivergenceFactor * risk0)) {
      trace.stop_reason = StopReason::divergence;
      throw Divergence("tgd_run: risk exceeded the divergence guard", std::move(trace));
    }
    if (t == config.T_max) break;
    DenseVector next = step_from(x, rg, inst.m, inst.n, config);
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = next[i] - x[i];
      d2 += d * d;
    }
    x = std::move(next);
    if (std::sqrt(d2) < config.tol) {
      const auto last = sensing::risk_and_gradient(acc, inst.b, x);
      trace.errors.push_back(config.track_errors ? sign_resolved_error(x, inst.x0)
                                                 : std::numeric_limits<double>::quiet_NaN());
      trace.risks.push_back(last.risk);
      trace.iterates.push_back(x);
      trace.converged = true;
      trace.stop_reason = StopReason::converged;
      return trace;
    }
  }
  trace.stop_reason = StopReason::max_iterations;
  return trace;
}

RecoveryTrace tgd_run(const ProblemInstance& inst, const DenseVector& x_init,
                      const TGDConfig& config) {
  EnsembleAccess acc(inst.ensemble);
  return tgd_run(acc, inst, x_init, config);
}

}  // namespace qsense::tgd
