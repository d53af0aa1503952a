#include <cmath>
#include <limits>

#include "doctest.h"
#include "oracles.hpp"
#include "qsense/error.hpp"
#include "qsense/linalg.hpp"

using namespace qsense;

TEST_CASE("DenseVector rejects empty and non-finite input") {
  CHECK_THROWS_AS(DenseVector(std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS(DenseVector(std::vector<double>{1.0, std::nan("")}), InvalidArgument);
  CHECK_THROWS_AS(DenseVector({1.0, std::numeric_limits<double>::infinity()}), InvalidArgument);
  DenseVector v{3.0, 0.0, -4.0};
  CHECK(v.norm() == doctest::Approx(5.0));
  CHECK(v.norm_inf() == 4.0);
  CHECK(v.nnz() == 2);
  CHECK(v.support() == std::vector<std::size_t>{0, 2});
}

TEST_CASE("sign_resolved_error is sign blind") {
  DenseVector x{1.0, -2.0, 0.5}, y{-1.0, 2.0, -0.5};
  CHECK(sign_resolved_error(x, y) == 0.0);
  CHECK(sign_resolved_error(x, x) == 0.0);
  DenseVector z{1.0, 0.0, 0.0};
  CHECK(sign_resolved_error(z, DenseVector{0.0, 1.0, 0.0}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("canonicalize_sign makes the first significant entry positive") {
  DenseVector v{0.0, -1e-20, -3.0, 2.0};
  canonicalize_sign(v);
  CHECK(v[2] == 3.0);
  CHECK(v[3] == -2.0);
}

TEST_CASE("DenseSymMatrix symmetrizes bitwise") {
  oracle::Gen g(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = g.size(1, 12);
    DenseSymMatrix m(n, g.vec(n * n));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) CHECK(m(r, c) == m(c, r));
  }
  CHECK_THROWS_AS(DenseSymMatrix(3, std::vector<double>(8)), InvalidArgument);
}

TEST_CASE("IndexSet sorts, deduplicates and range checks") {
  IndexSet s(10, {7, 2, 7, 0});
  CHECK(s.indices() == std::vector<std::size_t>{0, 2, 7});
  CHECK(s.contains(2));
  CHECK_FALSE(s.contains(3));
  CHECK(s.position(7) == 2);
  CHECK(s.position(5) == 3);
  CHECK_THROWS_AS(IndexSet(5, {5}), InvalidArgument);
}

TEST_CASE("hard_threshold keeps the best k-term approximation") {
  oracle::Gen g(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = g.size(1, 10);
    const std::size_t k = g.size(0, n);
    DenseVector v(g.vec(n));
    const DenseVector h = hard_threshold(v, k);
    CHECK(h.nnz() == k);
    double best = std::numeric_limits<double>::infinity();
    oracle::for_each_subset(n, k, [&](std::uint32_t mask) {
      double e = 0.0;
      for (std::size_t l = 0; l < n; ++l)
        if (!(mask >> l & 1u)) e += v[l] * v[l];
      best = std::min(best, e);
    });
    double e = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      if (h[l] != 0.0) CHECK(h[l] == v[l]);
      e += (v[l] - h[l]) * (v[l] - h[l]);
    }
    CHECK(e == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("hard_threshold breaks ties toward lower indices") {
  DenseVector v{1.0, -2.0, 2.0, 1.0};
  const DenseVector h = hard_threshold(v, 1);
  CHECK(h[1] == -2.0);
  CHECK(h.nnz() == 1);
  const DenseVector h3 = hard_threshold(v, 3);
  CHECK(h3[0] == 1.0);
  CHECK(h3[3] == 0.0);
}

TEST_CASE("soft_threshold shrinks toward zero") {
  DenseVector v{3.0, -0.5, -2.0};
  const DenseVector s = soft_threshold(v, 1.0);
  CHECK(s[0] == 2.0);
  CHECK(s[1] == 0.0);
  CHECK(s[2] == -1.0);
  CHECK_THROWS_AS(soft_threshold(v, -1.0), InvalidArgument);
}

TEST_CASE("top_eigpair agrees with a Jacobi reference") {
  oracle::Gen g(3);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = g.size(1, 20);
    std::vector<double> raw = g.vec(n * n);
    DenseSymMatrix m(n, raw);
    oracle::Mat a(n, std::vector<double>(n));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) a[r][c] = m(r, c);
    auto [w, v] = oracle::jacobi(a);
    std::size_t top = 0;
    for (std::size_t j = 1; j < n; ++j)
      if (std::abs(w[j]) > std::abs(w[top])) top = j;
    const EigenPair ep = top_eigpair(m);
    CHECK(std::abs(ep.value - w[top]) <= 1e-8 * std::abs(w[top]));
    double align = 0.0;
    for (std::size_t r = 0; r < n; ++r) align += ep.vector[r] * v[r][top];
    CHECK(std::abs(align) > 1.0 - 1e-8);
    CHECK(ep.vector.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("top_eigpair handles a spectrum symmetric about zero") {
  DenseSymMatrix m(2, {0.0, 1.0, 1.0, 0.0});
  const EigenPair ep = top_eigpair(m);
  CHECK(std::abs(ep.value) == doctest::Approx(1.0));
  CHECK(ep.residual <= 1e-10);

  DenseSymMatrix d(3, {2.0, 0, 0, 0, -2.0, 0, 0, 0, 0.5});
  const EigenPair e2 = top_eigpair(d);
  CHECK(std::abs(e2.value) == doctest::Approx(2.0));
  CHECK(e2.residual <= 1e-10 * 2.0);
}

TEST_CASE("top_eigpair separates a nearly opposite dominant pair") {
  // Rotate diag(-1, 0.9999, 0.9, 0.5, -0.3, 0.1) by the eigenvectors of a random matrix.
  oracle::Gen g(17);
  const std::size_t n = 6;
  oracle::Mat r(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) r[i][j] = r[j][i] = g.normal();
  const auto q = oracle::jacobi(r).second;
  const std::vector<double> lam{-1.0, 0.9999, 0.9, 0.5, -0.3, 0.1};
  std::vector<double> raw(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t t = 0; t < n; ++t) raw[i * n + j] += q[i][t] * lam[t] * q[j][t];
  const EigenPair ep = top_eigpair(DenseSymMatrix(n, raw));
  CHECK(ep.value == doctest::Approx(-1.0).epsilon(1e-10));
  double align = 0.0;
  for (std::size_t i = 0; i < n; ++i) align += ep.vector[i] * q[i][0];
  CHECK(std::abs(align) > 1.0 - 1e-8);
}

TEST_CASE("top_eigpair on the identity and zero matrix") {
  const EigenPair id = top_eigpair(DenseSymMatrix::identity(5));
  CHECK(id.value == doctest::Approx(1.0));
  const EigenPair z = top_eigpair(DenseSymMatrix(4));
  CHECK(z.value == 0.0);
}

TEST_CASE("restrict and embed are inverse on the support") {
  DenseVector v{1.0, 2.0, 3.0, 4.0};
  IndexSet s(4, {1, 3});
  const DenseVector r = restrict(v, s);
  CHECK(r.values() == std::vector<double>{2.0, 4.0});
  const DenseVector e = embed(r, s);
  CHECK(e.values() == std::vector<double>{0.0, 2.0, 0.0, 4.0});

  DenseSymMatrix m(3, {1, 2, 3, 2, 5, 6, 3, 6, 9});
  const DenseSymMatrix rm = restrict(m, IndexSet(3, {0, 2}));
  CHECK(rm(0, 1) == 3.0);
  CHECK(rm(1, 1) == 9.0);
  CHECK_THROWS_AS(restrict(v, IndexSet(5, {4})), InvalidArgument);
}
