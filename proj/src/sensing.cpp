#include "qsense/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qsense/error.hpp"
#include "qsense/random.hpp"

namespace qsense::sensing {

namespace {

constexpr std::uint64_t kEnsembleTag = 0;

std::vector<std::size_t> support_of(const DenseVector& x) { return x.support(); }

}  // namespace

std::string to_string(EnsembleMode mode) {
  return mode == EnsembleMode::materialized ? "materialized" : "streamed";
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::laplace: return "laplace";
    case NoiseKind::none: return "none";
  }
  return "none";
}

EnsembleMode parse_mode(const std::string& s) {
  if (s == "materialized") return EnsembleMode::materialized;
  if (s == "streamed") return EnsembleMode::streamed;
  throw InvalidArgument("unknown ensemble mode '" + s + "'");
}

NoiseKind parse_noise(const std::string& s) {
  if (s == "gaussian") return NoiseKind::gaussian;
  if (s == "laplace") return NoiseKind::laplace;
  if (s == "none") return NoiseKind::none;
  throw InvalidArgument("unknown noise kind '" + s + "'");
}

EnsembleMode auto_mode(std::size_t n, std::size_t m) {
  const double entries = static_cast<double>(n) * static_cast<double>(n) * static_cast<double>(m);
  return entries <= kMaterializeLimit ? EnsembleMode::materialized : EnsembleMode::streamed;
}

SensingEnsemble::SensingEnsemble(std::size_t n, std::size_t m, std::uint64_t seed,
                                 EnsembleMode mode,
                                 std::shared_ptr<const std::vector<double>> data)
    : n_(n), m_(m), seed_(seed), mode_(mode), data_(std::move(data)) {
  if (n == 0 || m == 0) throw InvalidArgument("SensingEnsemble: n and m must be positive");
}

SensingEnsemble SensingEnsemble::streamed(std::size_t n, std::size_t m, std::uint64_t seed) {
  return SensingEnsemble(n, m, seed, EnsembleMode::streamed,
                         std::make_shared<const std::vector<double>>());
}

SensingEnsemble SensingEnsemble::materialized(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (n == 0 || m == 0) throw InvalidArgument("SensingEnsemble: n and m must be positive");
  std::vector<double> a(n * n * m);
  std::size_t p = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) a[p++] = gaussian_entry(seed, kEnsembleTag, i, r, c);
    }
  }
  return SensingEnsemble(n, m, seed, EnsembleMode::materialized,
                         std::make_shared<const std::vector<double>>(std::move(a)));
}

SensingEnsemble SensingEnsemble::generate(std::size_t n, std::size_t m, std::uint64_t seed,
                                          EnsembleMode mode) {
  return mode == EnsembleMode::materialized ? materialized(n, m, seed) : streamed(n, m, seed);
}

SensingEnsemble SensingEnsemble::from_matrices(std::size_t n, std::size_t m,
                                               std::vector<double> data, std::uint64_t seed) {
  if (data.size() != n * n * m) throw InvalidArgument("from_matrices: expected m*n*n entries");
  for (double v : data) {
    if (!std::isfinite(v)) throw InvalidArgument("from_matrices: non-finite entry");
  }
  return SensingEnsemble(n, m, seed, EnsembleMode::materialized,
                         std::make_shared<const std::vector<double>>(std::move(data)));
}

double SensingEnsemble::entry(std::size_t i, std::size_t r, std::size_t c) const noexcept {
  if (mode_ == EnsembleMode::materialized) return (*data_)[(i * n_ + r) * n_ + c];
  return gaussian_entry(seed_, kEnsembleTag, i, r, c);
}

const double* SensingEnsemble::row(std::size_t i, std::size_t r, double* scratch) const noexcept {
  if (mode_ == EnsembleMode::materialized) return data_->data() + (i * n_ + r) * n_;
  for (std::size_t c = 0; c < n_; ++c) scratch[c] = gaussian_entry(seed_, kEnsembleTag, i, r, c);
  return scratch;
}

void SensingEnsemble::col(std::size_t i, std::size_t c, double* out) const noexcept {
  if (mode_ == EnsembleMode::materialized) {
    const double* base = data_->data() + i * n_ * n_ + c;
    for (std::size_t r = 0; r < n_; ++r) out[r] = base[r * n_];
    return;
  }
  for (std::size_t r = 0; r < n_; ++r) out[r] = gaussian_entry(seed_, kEnsembleTag, i, r, c);
}

EnsembleAccess::EnsembleAccess(const SensingEnsemble& e, std::size_t cache_bytes)
    : e_(&e), budget_(cache_bytes) {
  if (e.mode() == EnsembleMode::streamed) {
    rows_.resize(e.n());
    cols_.resize(e.n());
  }
}

const double* EnsembleAccess::slab(std::vector<std::vector<double>>& store, std::size_t j,
                                   bool is_row) {
  if (!store[j].empty()) return store[j].data();
  const std::size_t n = e_->n(), m = e_->m();
  const std::size_t bytes = n * m * sizeof(double);
  if (used_ + bytes > budget_) return nullptr;
  std::vector<double> s(n * m);
  for (std::size_t i = 0; i < m; ++i) {
    if (is_row) {
      e_->row(i, j, s.data() + i * n);
    } else {
      e_->col(i, j, s.data() + i * n);
    }
  }
  used_ += bytes;
  store[j] = std::move(s);
  return store[j].data();
}

const double* EnsembleAccess::row(std::size_t i, std::size_t r, double* scratch) {
  if (e_->mode() == EnsembleMode::materialized) return e_->row(i, r, scratch);
  if (const double* s = slab(rows_, r, true)) return s + i * e_->n();
  return e_->row(i, r, scratch);
}

const double* EnsembleAccess::col(std::size_t i, std::size_t c, double* scratch) {
  if (e_->mode() == EnsembleMode::materialized) {
    e_->col(i, c, scratch);
    return scratch;
  }
  if (const double* s = slab(cols_, c, false)) return s + i * e_->n();
  e_->col(i, c, scratch);
  return scratch;
}

double EnsembleAccess::entry(std::size_t i, std::size_t r, std::size_t c) const noexcept {
  if (e_->mode() == EnsembleMode::streamed) {
    const std::size_t n = e_->n();
    if (!rows_[r].empty()) return rows_[r][i * n + c];
    if (!cols_[c].empty()) return cols_[c][i * n + r];
  }
  return e_->entry(i, r, c);
}

double noise_variance(NoiseKind kind, double sigma) {
  switch (kind) {
    case NoiseKind::gaussian: return sigma * sigma;
    case NoiseKind::laplace: return 2.0 * sigma * sigma;
    case NoiseKind::none: return 0.0;
  }
  return 0.0;
}

std::vector<std::size_t> random_support(std::size_t n, std::size_t k, std::uint64_t seed,
                                        std::uint64_t stream) {
  if (k > n) throw InvalidArgument("random_support: k exceeds n");
  CounterRng rng(seed, stream);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t pick = j + static_cast<std::size_t>(rng.below(n - j));
    std::swap(pool[j], pool[pick]);
  }
  pool.resize(k);
  return pool;
}

DenseVector spike_signal(std::size_t n, std::size_t k, double mu0, std::uint64_t seed) {
  if (k == 0 || k > n) throw InvalidArgument("spike_signal: need 1 <= k <= n");
  const double lo = 1.0 / std::sqrt(static_cast<double>(k));
  if (!(mu0 >= lo - 1e-15 && mu0 <= 1.0)) {
    throw InvalidArgument("mu0 must lie in [1/sqrt(k), 1]");
  }
  const auto supp = random_support(n, k, seed, stream::kSignal);
  CounterRng signs(seed, stream::kSignal + 0x100);
  const double rest = k > 1 ? std::sqrt(std::max(0.0, (1.0 - mu0 * mu0) / static_cast<double>(k - 1)))
                            : 0.0;
  DenseVector x(n);
  for (std::size_t j = 0; j < k; ++j) {
    const double mag = j == 0 ? mu0 : rest;
    const double s = (signs.next_u64() >> 63) != 0 ? -1.0 : 1.0;
    x[supp[j]] = s * mag;
  }
  const double nx = x.norm();
  for (std::size_t i = 0; i < n; ++i) x[i] /= nx;
  return x;
}

std::vector<double> draw_noise(std::size_t m, double sigma, NoiseKind kind, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be non-negative");
  std::vector<double> e(m, 0.0);
  if (kind == NoiseKind::none) return e;
  CounterRng rng(seed, stream::kNoise);
  for (std::size_t i = 0; i < m; ++i) {
    e[i] = sigma * (kind == NoiseKind::gaussian ? rng.normal() : rng.laplace());
  }
  return e;
}

namespace {

// Quadratic form over the support of x only; the summation order here defines
// the canonical value of x^T A_i x used everywhere (measurements, risk, gradient).
double quad_sparse(EnsembleAccess& acc, const DenseVector& x, const std::vector<std::size_t>& s,
                   std::size_t i) {
  double q = 0.0;
  for (std::size_t r : s) {
    double row_sum = 0.0;
    for (std::size_t c : s) row_sum += acc.entry(i, r, c) * x[c];
    q += x[r] * row_sum;
  }
  return q;
}

std::vector<double> measurements(const SensingEnsemble& e, const DenseVector& x) {
  EnsembleAccess acc(e, 0);
  const auto s = support_of(x);
  std::vector<double> q(e.m());
  for (std::size_t i = 0; i < e.m(); ++i) q[i] = quad_sparse(acc, x, s, i);
  return q;
}

void check_length(const DenseVector& x, std::size_t n) {
  if (x.size() != n) throw InvalidArgument("vector length does not match ensemble dimension");
}

}  // namespace

ProblemInstance generate_instance(std::size_t n, std::size_t k, std::size_t m, double mu0_target,
                                  double sigma, NoiseKind noise_kind,
                                  std::optional<EnsembleMode> mode, std::uint64_t seed) {
  if (m == 0) throw InvalidArgument("m must be positive");
  if (k == 0 || k > n) throw InvalidArgument("need 1 <= k <= n");
  DenseVector x0 = spike_signal(n, k, mu0_target, seed);
  auto ens = SensingEnsemble::generate(n, m, seed, mode.value_or(auto_mode(n, m)));
  auto noise = draw_noise(m, sigma, noise_kind, seed);
  auto b = measurements(ens, x0);
  for (std::size_t i = 0; i < m; ++i) b[i] += noise[i];
  const double mu0 = x0.norm_inf() / x0.norm();
  return ProblemInstance{n,     k,          m,     std::move(x0), mu0, sigma, noise_kind,
                         std::move(noise), std::move(b), std::move(ens), seed, mu0_target};
}

BinaryInstance generate_binary_instance(std::size_t n, std::size_t k, std::size_t kprime,
                                        std::size_t m, double sigma, NoiseKind noise_kind,
                                        std::optional<EnsembleMode> mode, std::uint64_t seed) {
  if (m == 0) throw InvalidArgument("m must be positive");
  if (k == 0 || k > kprime || kprime > n) throw InvalidArgument("need 1 <= k <= k' <= n");
  DenseVector x0(n);
  for (std::size_t j : random_support(n, k, seed, stream::kSignal)) x0[j] = 1.0;
  auto ens = SensingEnsemble::generate(n, m, seed, mode.value_or(auto_mode(n, m)));
  auto noise = draw_noise(m, sigma, noise_kind, seed);
  auto b = measurements(ens, x0);
  for (std::size_t i = 0; i < m; ++i) b[i] += noise[i];
  const double mu0 = 1.0 / std::sqrt(static_cast<double>(k));
  return BinaryInstance{ProblemInstance{n, k, m, std::move(x0), mu0, sigma, noise_kind,
                                        std::move(noise), std::move(b), std::move(ens), seed, mu0},
                        kprime};
}

double measure(const SensingEnsemble& e, const DenseVector& x, std::size_t i) {
  EnsembleAccess acc(e, 0);
  return measure(acc, x, i);
}

double measure(EnsembleAccess& acc, const DenseVector& x, std::size_t i) {
  check_length(x, acc.n());
  if (i >= acc.m()) throw InvalidArgument("measure: index out of range");
  return quad_sparse(acc, x, support_of(x), i);
}

std::vector<double> residuals(EnsembleAccess& acc, std::span<const double> b,
                              const DenseVector& x) {
  check_length(x, acc.n());
  if (b.size() != acc.m()) throw InvalidArgument("measurement count mismatch");
  const auto s = support_of(x);
  std::vector<double> r(acc.m());
  for (std::size_t i = 0; i < acc.m(); ++i) r[i] = quad_sparse(acc, x, s, i) - b[i];
  return r;
}

double empirical_risk(EnsembleAccess& acc, std::span<const double> b, const DenseVector& x) {
  const auto r = residuals(acc, b, x);
  double s = 0.0;
  for (double v : r) s += v * v;
  return s / static_cast<double>(acc.m());
}

double empirical_risk(const ProblemInstance& inst, const DenseVector& x) {
  EnsembleAccess acc(inst.ensemble, 0);
  return empirical_risk(acc, inst.b, x);
}

RiskAndGradient risk_and_gradient(EnsembleAccess& acc, std::span<const double> b,
                                  const DenseVector& x) {
  const std::size_t n = acc.n(), m = acc.m();
  check_length(x, n);
  if (b.size() != m) throw InvalidArgument("measurement count mismatch");
  const auto s = support_of(x);
  std::vector<double> ax(n), atx(n), scratch(n), g(n, 0.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(ax.begin(), ax.end(), 0.0);
    std::fill(atx.begin(), atx.end(), 0.0);
    for (std::size_t j : s) {
      const double xj = x[j];
      const double* cj = acc.col(i, j, scratch.data());
      for (std::size_t l = 0; l < n; ++l) ax[l] += cj[l] * xj;
    }
    for (std::size_t j : s) {
      const double xj = x[j];
      const double* rj = acc.row(i, j, scratch.data());
      for (std::size_t l = 0; l < n; ++l) atx[l] += rj[l] * xj;
    }
    double q = 0.0;
    for (std::size_t r : s) q += x[r] * ax[r];
    const double res = q - b[i];
    sq += res * res;
    for (std::size_t l = 0; l < n; ++l) g[l] += res * (ax[l] + atx[l]);
  }
  const double md = static_cast<double>(m);
  for (double& v : g) v *= 2.0 / md;
  return {sq / md, sq, DenseVector(std::move(g))};
}

DenseVector risk_gradient(const ProblemInstance& inst, const DenseVector& x) {
  EnsembleAccess acc(inst.ensemble, 0);
  return risk_and_gradient(acc, inst.b, x).gradient;
}

double rip_estimate(const SensingEnsemble& e, std::size_t sparsity, std::size_t rank,
                    std::size_t trials, std::uint64_t seed) {
  const std::size_t n = e.n(), m = e.m();
  if (sparsity == 0 || sparsity > n) throw InvalidArgument("rip_estimate: need 1 <= sparsity <= n");
  if (rank == 0) throw InvalidArgument("rip_estimate: rank must be positive");
  double delta = 0.0;
  CounterRng rng(seed, stream::kRip);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto rows = random_support(n, sparsity, rng.next_u64(), stream::kRip);
    const auto cols = random_support(n, sparsity, rng.next_u64(), stream::kRip);
    std::vector<double> xm(sparsity * sparsity, 0.0);
    for (std::size_t q = 0; q < rank; ++q) {
      std::vector<double> u(sparsity), v(sparsity);
      for (double& a : u) a = rng.normal();
      for (double& a : v) a = rng.normal();
      for (std::size_t a = 0; a < sparsity; ++a) {
        for (std::size_t c = 0; c < sparsity; ++c) xm[a * sparsity + c] += u[a] * v[c];
      }
    }
    const double fro = norm2(xm);
    for (double& a : xm) a /= fro;
    double energy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double ip = 0.0;
      for (std::size_t a = 0; a < sparsity; ++a) {
        for (std::size_t c = 0; c < sparsity; ++c) ip += e.entry(i, rows[a], cols[c]) * xm[a * sparsity + c];
      }
      energy += ip * ip;
    }
    delta = std::max(delta, std::abs(energy / static_cast<double>(m) - 1.0));
  }
  return delta;
}

}  // namespace qsense::sensing
