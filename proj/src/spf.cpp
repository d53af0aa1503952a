#include "qsense/spf.hpp"

#include <cmath>
#include <limits>

#include "qsense/error.hpp"

namespace qsense::spf {

using sensing::EnsembleAccess;
using sensing::ProblemInstance;

double LinearizedSystem::row_dot(std::size_t i, const DenseVector& x) const {
  const double* r = rows.data() + i * n;
  double s = 0.0;
  for (std::size_t c = 0; c < n; ++c) s += r[c] * x[c];
  return s;
}

double LinearizedSystem::loss(const DenseVector& x) const {
  if (x.size() != n) throw InvalidArgument("loss: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = row_dot(i, x) - rhs[i];
    s += d * d;
  }
  return s;
}

LinearizedSystem linearize(EnsembleAccess& acc, std::span<const double> b, const DenseVector& y) {
  const std::size_t n = acc.n(), m = acc.m();
  if (y.size() != n) throw InvalidArgument("linearize: length mismatch");
  if (b.size() != m) throw InvalidArgument("linearize: measurement count mismatch");
  if (std::abs(y.norm() - 1.0) > 1e-12) throw InvalidArgument("linearize: y must have unit norm");
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  LinearizedSystem sys{m, n, std::vector<double>(m * n, 0.0), std::vector<double>(m)};
  const auto s = y.support();
  std::vector<double> scratch(n);
  for (std::size_t i = 0; i < m; ++i) {
    double* out = sys.rows.data() + i * n;
    for (std::size_t r : s) {
      const double yr = y[r];
      const double* row = acc.row(i, r, scratch.data());
      for (std::size_t c = 0; c < n; ++c) out[c] += yr * row[c];
    }
    for (std::size_t c = 0; c < n; ++c) out[c] *= scale;
    sys.rhs[i] = b[i] * scale;
  }
  return sys;
}

LinearizedSystem linearize(const ProblemInstance& inst, const DenseVector& y) {
  EnsembleAccess acc(inst.ensemble, 0);
  return linearize(acc, inst.b, y);
}

DenseVector iht(const LinearizedSystem& sys, std::size_t k, std::size_t iterations,
                const DenseVector& x_start) {
  if (iterations == 0) throw InvalidArgument("iht: need at least one iteration");
  if (x_start.size() != sys.n) throw InvalidArgument("iht: length mismatch");
  if (k > sys.n) throw InvalidArgument("iht: k exceeds n");
  DenseVector x = x_start;
  std::vector<double> res(sys.m);
  for (std::size_t it = 0; it < iterations; ++it) {
    const auto s = x.support();
    for (std::size_t i = 0; i < sys.m; ++i) {
      const double* r = sys.rows.data() + i * sys.n;
      double v = 0.0;
      for (std::size_t c : s) v += r[c] * x[c];
      res[i] = sys.rhs[i] - v;
    }
    DenseVector step = x;
    for (std::size_t i = 0; i < sys.m; ++i) {
      const double* r = sys.rows.data() + i * sys.n;
      const double ri = res[i];
      for (std::size_t c = 0; c < sys.n; ++c) step[c] += r[c] * ri;
    }
    x = hard_threshold(step, k);
  }
  return x;
}

void SPFConfig::validate() const {
  if (L == 0) throw InvalidArgument("SPF: L must be at least 1");
  if (!(tol >= 0.0)) throw InvalidArgument("SPF: tol must be non-negative");
}

RecoveryTrace spf_run(EnsembleAccess& acc, const ProblemInstance& inst, const DenseVector& x_init,
                      const SPFConfig& config) {
  config.validate();
  const double n0 = x_init.norm();
  if (!(n0 > 0.0)) throw InvalidArgument("spf_run: x_init must be nonzero");
  if (x_init.size() != inst.n) throw InvalidArgument("spf_run: length mismatch");

  RecoveryTrace trace;
  auto record = [&](DenseVector x) {
    trace.errors.push_back(config.track_errors ? sign_resolved_error(x, inst.x0)
                                               : std::numeric_limits<double>::quiet_NaN());
    trace.risks.push_back(sensing::empirical_risk(acc, inst.b, x));
    trace.iterates.push_back(std::move(x));
  };

  DenseVector x = x_init;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] /= n0;
  record(x);

  for (std::size_t t = 0; t < config.T_max; ++t) {
    const LinearizedSystem sys = linearize(acc, inst.b, x);
    DenseVector z = iht(sys, inst.k, config.L, x);
    const double nz = z.norm();
    if (!(nz > 0.0)) {
      trace.stop_reason = StopReason::degenerate_iterate;
      throw DegenerateIterate("spf_run: inner solve returned the zero vector", std::move(trace));
    }
    for (std::size_t i = 0; i < z.size(); ++i) z[i] /= nz;
    const double c = dot(z.view(), x.view());
    double s2 = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double d = z[i] - c * x[i];
      s2 += d * d;
    }
    x = std::move(z);
    record(x);
    if (std::sqrt(s2) < config.tol) {
      trace.converged = true;
      trace.stop_reason = StopReason::converged;
      return trace;
    }
  }
  trace.stop_reason = StopReason::max_iterations;
  return trace;
}

RecoveryTrace spf_run(const ProblemInstance& inst, const DenseVector& x_init,
                      const SPFConfig& config) {
  EnsembleAccess acc(inst.ensemble);
  return spf_run(acc, inst, x_init, config);
}

}  // namespace qsense::spf
