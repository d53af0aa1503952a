#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "qsense/error.hpp"
#include "qsense/init_quadratic.hpp"
#include "qsense/spf.hpp"

using namespace qsense;
using namespace qsense::sensing;
using namespace qsense::spf;

namespace {

DenseVector unit(std::vector<double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  for (double& x : v) x /= std::sqrt(s);
  return DenseVector(std::move(v));
}

LinearizedSystem gaussian_system(std::size_t m, std::size_t n, const DenseVector& xs,
                                 std::uint64_t seed) {
  CounterRng rng(seed, 77);
  LinearizedSystem sys{m, n, std::vector<double>(m * n), std::vector<double>(m, 0.0)};
  for (double& v : sys.rows) v = rng.normal() / std::sqrt(static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i) sys.rhs[i] = sys.row_dot(i, xs);
  return sys;
}

}  // namespace

TEST_CASE("linearize builds y^T A_i / sqrt(m)") {
  oracle::Gen g(21);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = g.size(2, 7), m = g.size(2, 9);
    const auto inst = generate_instance(n, 1, m, 1.0, 0.1, NoiseKind::gaussian,
                                        t % 2 ? EnsembleMode::streamed : EnsembleMode::materialized,
                                        600 + t);
    const DenseVector y = unit(g.vec(n));
    const LinearizedSystem sys = linearize(inst, y);
    const double sm = std::sqrt(static_cast<double>(m));
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t c = 0; c < n; ++c) {
        double v = 0.0;
        for (std::size_t r = 0; r < n; ++r) v += y[r] * inst.ensemble.entry(i, r, c);
        CHECK(std::abs(sys.rows[i * n + c] - v / sm) <= 1e-12 * std::max(1.0, std::abs(v)));
      }
      CHECK(sys.rhs[i] == doctest::Approx(inst.b[i] / sm).epsilon(1e-15));
    }
  }
  const auto inst = generate_instance(4, 1, 3, 1.0, 0.0, NoiseKind::none, std::nullopt, 1);
  CHECK_THROWS_AS(linearize(inst, DenseVector{1.0, 1.0, 0.0, 0.0}), InvalidArgument);
}

TEST_CASE("iht keeps k-sparse iterates and recovers a sparse vector") {
  const std::size_t n = 100, k = 4, m = 120;
  std::vector<double> xv(n, 0.0);
  xv[3] = 1.0;
  xv[40] = -0.5;
  xv[41] = 0.8;
  xv[99] = 0.3;
  const DenseVector xs(xv);
  const auto sys = gaussian_system(m, n, xs, 5);
  const DenseVector x = iht(sys, k, 200, DenseVector(n));
  CHECK(x.nnz() <= k);
  double e = 0;
  for (std::size_t l = 0; l < n; ++l) e += (x[l] - xs[l]) * (x[l] - xs[l]);
  CHECK(std::sqrt(e) < 1e-8);
  CHECK(sys.loss(x) < 1e-16);
}

TEST_CASE("iht does not increase the loss from a fixed point") {
  const std::size_t n = 30, m = 60;
  const DenseVector xs{1.0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
                       0,   0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  const auto sys = gaussian_system(m, n, xs, 2);
  CHECK(iht(sys, 1, 5, xs) == xs);
  CHECK_THROWS_AS(iht(sys, 1, 0, xs), InvalidArgument);
}

TEST_CASE("spf iterates have unit norm and start from the normalized init") {
  const auto inst = generate_instance(40, 3, 800, 0.8, 0.0, NoiseKind::none, std::nullopt, 31);
  const auto e = init::initialize(inst);
  const RecoveryTrace tr = spf_run(inst, e.x_init);
  REQUIRE(tr.size() >= 2);
  for (const auto& it : tr.iterates) CHECK(it.norm() == doctest::Approx(1.0).epsilon(1e-12));
  const double n0 = e.x_init.norm();
  for (std::size_t l = 0; l < inst.n; ++l) CHECK(tr.iterates[0][l] == e.x_init[l] / n0);
  CHECK(tr.errors.size() == tr.size());
  CHECK(tr.risks.size() == tr.size());
  CHECK(tr.converged);
  CHECK(tr.stop_reason == StopReason::converged);
  CHECK(tr.final_error() < 1e-8);
}

TEST_CASE("spf without error tracking records NaN errors") {
  const auto inst = generate_instance(20, 2, 300, 0.8, 0.0, NoiseKind::none, std::nullopt, 4);
  SPFConfig cfg;
  cfg.track_errors = false;
  cfg.T_max = 3;
  const RecoveryTrace tr = spf_run(inst, init::initialize(inst).x_init, cfg);
  for (double e : tr.errors) CHECK(std::isnan(e));
}

TEST_CASE("spf config validation") {
  SPFConfig c;
  c.L = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.tol = -1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  const auto inst = generate_instance(5, 1, 5, 1.0, 0.0, NoiseKind::none, std::nullopt, 1);
  CHECK_THROWS_AS(spf_run(inst, DenseVector(5)), InvalidArgument);
}

TEST_CASE("spf stops at T_max with max_iterations") {
  const auto inst = generate_instance(40, 3, 800, 0.8, 0.05, NoiseKind::gaussian, std::nullopt, 9);
  SPFConfig cfg;
  cfg.T_max = 2;
  cfg.tol = 0.0;
  const RecoveryTrace tr = spf_run(inst, init::initialize(inst).x_init, cfg);
  CHECK(tr.size() == 3);
  CHECK_FALSE(tr.converged);
  CHECK(tr.stop_reason == StopReason::max_iterations);
}
