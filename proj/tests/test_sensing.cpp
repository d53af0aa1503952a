#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "qsense/error.hpp"
#include "qsense/sensing.hpp"

using namespace qsense;
using namespace qsense::sensing;

namespace {

ProblemInstance small_instance(oracle::Gen& g, std::uint64_t seed, EnsembleMode mode) {
  const std::size_t n = g.size(2, 8), m = g.size(2, 10);
  const std::size_t k = g.size(1, n);
  const double lo = 1.0 / std::sqrt(static_cast<double>(k));
  const double mu0 = k == 1 ? 1.0 : g.uniform(lo, 1.0);
  return generate_instance(n, k, m, mu0, g.uniform(0.0, 0.3), NoiseKind::gaussian, mode, seed);
}

}  // namespace

TEST_CASE("mode and noise names round trip") {
  for (auto m : {EnsembleMode::materialized, EnsembleMode::streamed})
    CHECK(parse_mode(to_string(m)) == m);
  for (auto k : {NoiseKind::gaussian, NoiseKind::laplace, NoiseKind::none})
    CHECK(parse_noise(to_string(k)) == k);
  CHECK_THROWS_AS(parse_mode("bogus"), InvalidArgument);
  CHECK(auto_mode(10, 100) == EnsembleMode::materialized);
  CHECK(auto_mode(100, 3000) == EnsembleMode::streamed);
}

TEST_CASE("streamed and materialized ensembles hold identical entries") {
  const auto s = SensingEnsemble::streamed(5, 7, 11);
  const auto m = SensingEnsemble::materialized(5, 7, 11);
  std::vector<double> scratch(5), col_s(5), col_m(5);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t r = 0; r < 5; ++r) {
      const double* rs = s.row(i, r, scratch.data());
      std::vector<double> copy(rs, rs + 5);
      const double* rm = m.row(i, r, nullptr);
      for (std::size_t c = 0; c < 5; ++c) {
        CHECK(copy[c] == rm[c]);
        CHECK(s.entry(i, r, c) == gaussian_entry(11, 0, i, r, c));
      }
      s.col(i, r, col_s.data());
      m.col(i, r, col_m.data());
      CHECK(col_s == col_m);
    }
  }
}

TEST_CASE("EnsembleAccess returns the same rows and columns as direct access") {
  const auto e = SensingEnsemble::streamed(6, 9, 3);
  EnsembleAccess tiny(e, 1);  // budget too small to cache anything
  EnsembleAccess big(e);
  std::vector<double> s1(6), s2(6);
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      const double* a = tiny.row(i, j, s1.data());
      const double* b = big.row(i, j, s2.data());
      for (std::size_t c = 0; c < 6; ++c) CHECK(a[c] == b[c]);
      const double* ca = tiny.col(i, j, s1.data());
      const double* cb = big.col(i, j, s2.data());
      for (std::size_t r = 0; r < 6; ++r) CHECK(ca[r] == cb[r]);
      for (std::size_t r = 0; r < 6; ++r) CHECK(cb[r] == e.entry(i, r, j));
    }
  }
}

TEST_CASE("spike_signal has unit norm, k nonzeros and the requested incoherence") {
  oracle::Gen g(4);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = g.size(1, 40);
    const std::size_t k = g.size(1, n);
    const double lo = 1.0 / std::sqrt(static_cast<double>(k));
    const double mu0 = k == 1 ? 1.0 : g.uniform(lo, 1.0);
    const DenseVector x = spike_signal(n, k, mu0, 100 + t);
    CHECK(x.nnz() == k);
    CHECK(x.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(x.norm_inf() == doctest::Approx(std::max(mu0, lo)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(spike_signal(10, 4, 0.3, 1), InvalidArgument);
  CHECK_THROWS_AS(spike_signal(10, 11, 0.9, 1), InvalidArgument);
}

TEST_CASE("random_support draws distinct indices") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    auto idx = random_support(20, 20, s, 1);
    std::sort(idx.begin(), idx.end());
    for (std::size_t j = 0; j < 20; ++j) CHECK(idx[j] == j);
  }
}

TEST_CASE("noise has the advertised variance") {
  for (auto kind : {NoiseKind::gaussian, NoiseKind::laplace}) {
    const auto eps = draw_noise(100000, 0.5, kind, 1);
    double s2 = 0;
    for (double v : eps) s2 += v * v;
    CHECK(s2 / 1e5 == doctest::Approx(noise_variance(kind, 0.5)).epsilon(0.03));
  }
  for (double v : draw_noise(10, 0.5, NoiseKind::none, 1)) CHECK(v == 0.0);
  CHECK_THROWS_AS(draw_noise(3, -1.0, NoiseKind::gaussian, 1), InvalidArgument);
}

TEST_CASE("measurements match the naive quadratic form") {
  oracle::Gen g(5);
  for (int t = 0; t < 50; ++t) {
    const auto inst = small_instance(g, 200 + t, t % 2 ? EnsembleMode::streamed
                                                       : EnsembleMode::materialized);
    for (std::size_t i = 0; i < inst.m; ++i) {
      const double q = oracle::quad(oracle::matrix_of(inst.ensemble, i), inst.x0.values());
      CHECK(std::abs(measure(inst.ensemble, inst.x0, i) - q) <= 1e-12 * std::max(1.0, std::abs(q)));
      CHECK(inst.b[i] == measure(inst.ensemble, inst.x0, i) + inst.noise[i]);
    }
  }
}

TEST_CASE("empirical_risk and risk_gradient match naive loops") {
  oracle::Gen g(6);
  for (int t = 0; t < 50; ++t) {
    const auto inst = small_instance(g, 300 + t, EnsembleMode::materialized);
    const DenseVector x(g.vec(inst.n));
    const double r = empirical_risk(inst, x);
    const double ro = oracle::risk(inst, x.values());
    CHECK(std::abs(r - ro) <= 1e-12 * std::max(1.0, ro));
    const DenseVector grad = risk_gradient(inst, x);
    const auto go = oracle::gradient(inst, x.values());
    double scale = 1.0;
    for (double v : go) scale = std::max(scale, std::abs(v));
    for (std::size_t l = 0; l < inst.n; ++l) CHECK(std::abs(grad[l] - go[l]) <= 1e-12 * scale);

    EnsembleAccess acc(inst.ensemble);
    const auto rg = risk_and_gradient(acc, inst.b, x);
    CHECK(rg.risk == r);
    CHECK(rg.gradient == grad);
    const auto res = residuals(acc, inst.b, x);
    const auto reso = oracle::resid(inst, x.values());
    for (std::size_t i = 0; i < inst.m; ++i)
      CHECK(std::abs(res[i] - reso[i]) <= 1e-12 * std::max(1.0, std::abs(reso[i])));
  }
}

TEST_CASE("risk_gradient agrees with central finite differences") {
  oracle::Gen g(7);
  for (int t = 0; t < 50; ++t) {
    const auto inst = small_instance(g, 400 + t, EnsembleMode::materialized);
    const DenseVector x(g.vec(inst.n));
    const auto fd = oracle::fd_gradient(
        [&](const std::vector<double>& y) { return empirical_risk(inst, DenseVector(y)); },
        x.values(), 1e-5);
    const DenseVector grad = risk_gradient(inst, x);
    double num = 0, den = 0;
    for (std::size_t l = 0; l < inst.n; ++l) {
      num += (grad[l] - fd[l]) * (grad[l] - fd[l]);
      den += fd[l] * fd[l];
    }
    CHECK(std::sqrt(num) < 1e-5 * std::max(std::sqrt(den), 1e-3));
  }
}

TEST_CASE("noiseless risk vanishes at the planted signal in every mode") {
  for (auto mode : {EnsembleMode::materialized, EnsembleMode::streamed}) {
    const auto inst = generate_instance(30, 4, 60, 0.7, 0.0, NoiseKind::none, mode, 9);
    CHECK(empirical_risk(inst, inst.x0) == 0.0);
    const DenseVector g = risk_gradient(inst, inst.x0);
    CHECK(g.norm() == 0.0);
    DenseVector neg = inst.x0;
    for (std::size_t l = 0; l < neg.size(); ++l) neg[l] = -neg[l];
    CHECK(empirical_risk(inst, neg) == 0.0);
  }
}

TEST_CASE("instances do not depend on the storage mode") {
  const auto a = generate_instance(12, 3, 40, 0.8, 0.1, NoiseKind::laplace,
                                   EnsembleMode::materialized, 21);
  const auto b = generate_instance(12, 3, 40, 0.8, 0.1, NoiseKind::laplace,
                                   EnsembleMode::streamed, 21);
  CHECK(a.x0 == b.x0);
  CHECK(a.b == b.b);
  CHECK(a.noise == b.noise);
}

TEST_CASE("binary instances have k unit entries") {
  const auto bi = generate_binary_instance(16, 4, 6, 12, 0.0, NoiseKind::none, std::nullopt, 3);
  CHECK(bi.kprime == 6);
  CHECK(bi.problem.x0.nnz() == 4);
  for (double v : bi.problem.x0.values()) CHECK((v == 0.0 || v == 1.0));
  CHECK_THROWS_AS(generate_binary_instance(16, 5, 4, 12, 0.0, NoiseKind::none, std::nullopt, 3),
                  InvalidArgument);
}

TEST_CASE("rip_estimate shrinks as m grows") {
  const auto small = SensingEnsemble::materialized(20, 50, 1);
  const auto large = SensingEnsemble::materialized(20, 2000, 1);
  const double ds = rip_estimate(small, 3, 1, 30, 5);
  const double dl = rip_estimate(large, 3, 1, 30, 5);
  CHECK(ds >= 0.0);
  CHECK(dl < ds);
  CHECK(dl < 0.3);
}

TEST_CASE("restricted isometry lower estimate at m = 50 s log n") {
  const std::size_t n = 50, s = 3;
  const auto m = static_cast<std::size_t>(std::ceil(50.0 * s * std::log(static_cast<double>(n))));
  int below = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto e = SensingEnsemble::materialized(n, m, 300 + seed);
    if (rip_estimate(e, s, 1, 200, seed) < 0.5) ++below;
  }
  CHECK(below >= 18);
}
