#include "qsense/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qsense/error.hpp"
#include "qsense/random.hpp"

namespace qsense {

namespace {

void check_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidArgument("DenseVector: non-finite entry");
  }
}

}  // namespace

DenseVector::DenseVector(std::size_t n) : data_(n, 0.0) {
  if (n == 0) throw InvalidArgument("DenseVector: length must be positive");
}

DenseVector::DenseVector(std::vector<double> entries) : data_(std::move(entries)) {
  if (data_.empty()) throw InvalidArgument("DenseVector: length must be positive");
  check_finite(data_);
}

DenseVector::DenseVector(std::initializer_list<double> entries)
    : DenseVector(std::vector<double>(entries)) {}

double DenseVector::norm() const noexcept { return norm2(data_); }

double DenseVector::norm_inf() const noexcept {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

std::size_t DenseVector::nnz() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(data_.begin(), data_.end(), [](double x) { return x != 0.0; }));
}

std::vector<std::size_t> DenseVector::support() const {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] != 0.0) s.push_back(i);
  }
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

double sign_resolved_error(const DenseVector& x, const DenseVector& x0) {
  if (x.size() != x0.size()) throw InvalidArgument("sign_resolved_error: length mismatch");
  double dm = 0.0, dp = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i] - x0[i];
    const double b = x[i] + x0[i];
    dm += a * a;
    dp += b * b;
  }
  return std::sqrt(std::min(dm, dp));
}

void canonicalize_sign(DenseVector& v) {
  const double eps = 1e-14 * std::max(1.0, v.norm_inf());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > eps) {
      if (v[i] < 0) {
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = -v[j];
      }
      return;
    }
  }
}

DenseSymMatrix::DenseSymMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {
  if (n == 0) throw InvalidArgument("DenseSymMatrix: dimension must be positive");
}

DenseSymMatrix::DenseSymMatrix(std::size_t n, std::vector<double> row_major)
    : n_(n), a_(std::move(row_major)) {
  if (n == 0) throw InvalidArgument("DenseSymMatrix: dimension must be positive");
  if (a_.size() != n * n) throw InvalidArgument("DenseSymMatrix: expected n*n entries");
  check_finite(a_);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = r + 1; c < n; ++c) {
      const double s = 0.5 * (a_[r * n + c] + a_[c * n + r]);
      a_[r * n + c] = s;
      a_[c * n + r] = s;
    }
  }
}

DenseSymMatrix DenseSymMatrix::identity(std::size_t n) {
  DenseSymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m.a_[i * n + i] = 1.0;
  return m;
}

void DenseSymMatrix::set(std::size_t r, std::size_t c, double value) noexcept {
  a_[r * n_ + c] = value;
  a_[c * n_ + r] = value;
}

void DenseSymMatrix::multiply(std::span<const double> x, std::span<double> out) const {
  if (x.size() != n_ || out.size() != n_) throw InvalidArgument("multiply: size mismatch");
  for (std::size_t r = 0; r < n_; ++r) {
    const double* row = a_.data() + r * n_;
    double s = 0.0;
    for (std::size_t c = 0; c < n_; ++c) s += row[c] * x[c];
    out[r] = s;
  }
}

IndexSet::IndexSet(std::size_t universe, std::vector<std::size_t> indices)
    : universe_(universe), idx_(std::move(indices)) {
  std::sort(idx_.begin(), idx_.end());
  idx_.erase(std::unique(idx_.begin(), idx_.end()), idx_.end());
  if (!idx_.empty() && idx_.back() >= universe_) {
    throw InvalidArgument("IndexSet: index " + std::to_string(idx_.back()) +
                          " out of range for universe " + std::to_string(universe_));
  }
}

bool IndexSet::contains(std::size_t i) const noexcept {
  return std::binary_search(idx_.begin(), idx_.end(), i);
}

std::size_t IndexSet::position(std::size_t i) const noexcept {
  auto it = std::lower_bound(idx_.begin(), idx_.end(), i);
  if (it == idx_.end() || *it != i) return idx_.size();
  return static_cast<std::size_t>(it - idx_.begin());
}

DenseVector hard_threshold(const DenseVector& v, std::size_t k) {
  const std::size_t n = v.size();
  if (k > n) throw InvalidArgument("hard_threshold: k exceeds length");
  DenseVector out(n);
  if (k == 0) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Strict weak order: larger magnitude first, then lower index.
  auto before = [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(v[a]), mb = std::abs(v[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   order.end(), before);
  const std::size_t kth = order[k - 1];
  for (std::size_t i = 0; i < n; ++i) {
    if (i == kth || before(i, kth)) out[i] = v[i];
  }
  return out;
}

DenseVector soft_threshold(const DenseVector& v, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("soft_threshold: tau must be non-negative");
  DenseVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]) - tau;
    out[i] = a > 0.0 ? std::copysign(a, v[i]) : 0.0;
  }
  return out;
}

namespace {

struct PowerResult {
  double lambda = 0.0;
  std::vector<double> v;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool alternating = false;
};

double residual_of(const DenseSymMatrix& m, const std::vector<double>& v, double lambda,
                   std::vector<double>& scratch) {
  m.multiply(v, scratch);
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = scratch[i] - lambda * v[i];
    s += d * d;
  }
  return std::sqrt(s);
}

void normalize(std::vector<double>& v) {
  const double nv = norm2(v);
  for (double& x : v) x /= nv;
}

// Power iteration on (M + shift*I). Returns the Rayleigh quotient of M itself.
PowerResult power(const DenseSymMatrix& m, double shift, std::vector<double> v, double tol,
                  std::size_t max_iter) {
  const std::size_t n = m.dim();
  std::vector<double> w(n), scratch(n);
  PowerResult best;
  best.residual = INFINITY;
  normalize(v);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    m.multiply(v, w);
    const double lambda = dot(v, w);
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = w[i] - lambda * v[i];
      r += d * d;
    }
    r = std::sqrt(r);
    if (r < best.residual) {
      best.residual = r;
      best.lambda = lambda;
      best.v = v;
      best.iterations = it;
    }
    if (r <= tol * std::max(1.0, std::abs(lambda))) {
      best.converged = true;
      return best;
    }
    for (std::size_t i = 0; i < n; ++i) w[i] += shift * v[i];
    const double nw = norm2(w);
    if (nw == 0.0) {
      // v lies in the null space of the shifted operator: exact eigenvector.
      best.lambda = lambda;
      best.v = v;
      best.residual = r;
      best.converged = r <= tol * std::max(1.0, std::abs(lambda));
      return best;
    }
    // Oscillation check: Rayleigh-Ritz on span{u, Mu}. An invariant plane whose
    // Ritz values have opposite signs means two competing ends of the spectrum.
    if (shift == 0.0 && it >= 256 && it % 64 == 0) {
      std::vector<double> u(n), p(n), b2(n), q(n);
      for (std::size_t i = 0; i < n; ++i) u[i] = w[i] / nw;
      m.multiply(u, p);
      const double h11 = dot(u, p);
      for (std::size_t i = 0; i < n; ++i) b2[i] = p[i] - h11 * u[i];
      const double nb = norm2(b2);
      if (nb > 1e-4 * std::abs(h11)) {
        for (double& x : b2) x /= nb;
        m.multiply(b2, q);
        const double h12 = dot(u, q), h22 = dot(b2, q);
        double r2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = q[i] - h12 * u[i] - h22 * b2[i];
          r2 += d * d;
        }
        const double mid = 0.5 * (h11 + h22);
        const double rad = std::sqrt(0.25 * (h11 - h22) * (h11 - h22) + h12 * h12);
        const double t1 = mid + rad, t2 = mid - rad;
        const double top = std::max(std::abs(t1), std::abs(t2));
        if (t1 > 0.0 && t2 < 0.0 && std::sqrt(r2) <= 1e-6 * top) {
          best.alternating = true;
          best.lambda = top;
          return best;
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
  }
  return best;
}

std::vector<double> random_start(std::size_t n, std::uint64_t stream) {
  CounterRng rng(0x5eed5eed5eedULL, stream);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

}  // namespace

EigenPair top_eigpair(const DenseSymMatrix& m, const EigenOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("top_eigpair: tol must be positive");
  const std::size_t n = m.dim();
  if (n == 1) return {m(0, 0), DenseVector{1.0}, 0.0, 0};

  double scale = 0.0;
  for (double x : m.row_major()) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) {
    DenseVector e(n);
    e[0] = 1.0;
    return {0.0, e, 0.0, 0};
  }

  double best_residual = INFINITY;
  std::size_t total_iter = 0;
  for (std::uint64_t attempt = 0; attempt < 2; ++attempt) {
    PowerResult r = power(m, 0.0, random_start(n, attempt), options.tol, options.max_iter);
    total_iter += r.iterations;
    if (r.alternating) {
      // Dominant magnitude shared by +l and -l: isolate each end with a shift.
      const double c = r.lambda;
      PowerResult hi = power(m, c, random_start(n, 10 + attempt), options.tol, options.max_iter);
      PowerResult lo = power(m, -c, random_start(n, 20 + attempt), options.tol, options.max_iter);
      total_iter += hi.iterations + lo.iterations;
      PowerResult* pick = nullptr;
      if (hi.converged && lo.converged) {
        pick = std::abs(hi.lambda) >= std::abs(lo.lambda) ? &hi : &lo;
      } else if (hi.converged) {
        pick = &hi;
      } else if (lo.converged) {
        pick = &lo;
      }
      if (pick != nullptr) r = *pick;
      best_residual = std::min({best_residual, hi.residual, lo.residual});
    }
    best_residual = std::min(best_residual, r.residual);
    if (r.converged) {
      DenseVector v(std::move(r.v));
      canonicalize_sign(v);
      std::vector<double> scratch(n);
      const double res = residual_of(m, v.values(), r.lambda, scratch);
      return {r.lambda, std::move(v), res, total_iter};
    }
  }
  throw ConvergenceFailure("top_eigpair: power iteration did not converge", best_residual);
}

DenseVector restrict(const DenseVector& v, const IndexSet& s) {
  if (s.empty()) throw InvalidArgument("restrict: empty index set");
  if (s.indices().back() >= v.size()) {
    throw InvalidArgument("restrict: index out of range");
  }
  DenseVector out(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) out[j] = v[s[j]];
  return out;
}

DenseSymMatrix restrict(const DenseSymMatrix& m, const IndexSet& s) {
  if (s.empty()) throw InvalidArgument("restrict: empty index set");
  if (s.indices().back() >= m.dim()) throw InvalidArgument("restrict: index out of range");
  DenseSymMatrix out(s.size());
  for (std::size_t a = 0; a < s.size(); ++a) {
    for (std::size_t b = a; b < s.size(); ++b) out.set(a, b, m(s[a], s[b]));
  }
  return out;
}

DenseVector embed(const DenseVector& sub, const IndexSet& s) {
  if (sub.size() != s.size()) throw InvalidArgument("embed: size mismatch");
  DenseVector out(s.universe());
  for (std::size_t j = 0; j < s.size(); ++j) out[s[j]] = sub[j];
  return out;
}

}  // namespace qsense
