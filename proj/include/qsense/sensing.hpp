#pragma once

// Random quadratic measurements b_i = <A_i, x0 x0^T> + eps_i with i.i.d.
// standard normal A_i, plus the empirical risk and its gradient.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qsense/linalg.hpp"

namespace qsense::sensing {

enum class EnsembleMode { materialized, streamed };
enum class NoiseKind { gaussian, laplace, none };

std::string to_string(EnsembleMode mode);
std::string to_string(NoiseKind kind);
EnsembleMode parse_mode(const std::string& s);
NoiseKind parse_noise(const std::string& s);

/// n*n*m above which auto mode selection streams entries instead of storing them.
inline constexpr double kMaterializeLimit = 1e7;
EnsembleMode auto_mode(std::size_t n, std::size_t m);

/// m matrices of size n x n. Entry (i, r, c) is gaussian_entry(seed, 0, i, r, c)
/// in both modes; a materialized ensemble simply stores those values.
class SensingEnsemble {
 public:
  static SensingEnsemble streamed(std::size_t n, std::size_t m, std::uint64_t seed);
  static SensingEnsemble materialized(std::size_t n, std::size_t m, std::uint64_t seed);
  static SensingEnsemble generate(std::size_t n, std::size_t m, std::uint64_t seed,
                                  EnsembleMode mode);
  /// Explicit matrices, layout [i][r][c] row-major. Reported as materialized.
  static SensingEnsemble from_matrices(std::size_t n, std::size_t m, std::vector<double> data,
                                       std::uint64_t seed = 0);

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return m_; }
  EnsembleMode mode() const noexcept { return mode_; }
  std::uint64_t seed() const noexcept { return seed_; }

  double entry(std::size_t i, std::size_t r, std::size_t c) const noexcept;
  /// Row r of A_i. Points into storage when materialized, else fills scratch.
  const double* row(std::size_t i, std::size_t r, double* scratch) const noexcept;
  /// Column c of A_i, always copied into out.
  void col(std::size_t i, std::size_t c, double* out) const noexcept;
  /// Stored entries ([i][r][c]); empty when streamed.
  const std::vector<double>& data() const noexcept { return *data_; }

 private:
  SensingEnsemble(std::size_t n, std::size_t m, std::uint64_t seed, EnsembleMode mode,
                  std::shared_ptr<const std::vector<double>> data);
  std::size_t n_;
  std::size_t m_;
  std::uint64_t seed_;
  EnsembleMode mode_;
  std::shared_ptr<const std::vector<double>> data_;
};

/// Per-run accessor. For streamed ensembles it keeps whole slabs
/// {A_i[j,:]} and {A_i[:,j]} over all i for the indices j that an algorithm
/// touches, so repeated sweeps over a sparse support are not regenerated.
/// Not thread-safe; create one per run.
class EnsembleAccess {
 public:
  explicit EnsembleAccess(const SensingEnsemble& e, std::size_t cache_bytes = kDefaultCacheBytes);

  static constexpr std::size_t kDefaultCacheBytes = std::size_t{512} << 20;

  const SensingEnsemble& ensemble() const noexcept { return *e_; }
  std::size_t n() const noexcept { return e_->n(); }
  std::size_t m() const noexcept { return e_->m(); }

  const double* row(std::size_t i, std::size_t r, double* scratch);
  const double* col(std::size_t i, std::size_t c, double* scratch);
  double entry(std::size_t i, std::size_t r, std::size_t c) const noexcept;

 private:
  const double* slab(std::vector<std::vector<double>>& store, std::size_t j, bool is_row);

  const SensingEnsemble* e_;
  std::size_t budget_;
  std::size_t used_ = 0;
  std::vector<std::vector<double>> rows_;
  std::vector<std::vector<double>> cols_;
};

struct ProblemInstance {
  std::size_t n;
  std::size_t k;
  std::size_t m;
  DenseVector x0;
  double mu0;
  double sigma;
  NoiseKind noise_kind;
  std::vector<double> noise;
  std::vector<double> b;
  SensingEnsemble ensemble;
  std::uint64_t seed;
  double mu0_target = 0.0;  // generator input, kept so files can regenerate x0 exactly
};

struct BinaryInstance {
  ProblemInstance problem;  // x0 in {0,1}^n, not normalized
  std::size_t kprime;
};

/// Variance of one noise draw of the given kind at scale sigma.
double noise_variance(NoiseKind kind, double sigma);

ProblemInstance generate_instance(std::size_t n, std::size_t k, std::size_t m, double mu0_target,
                                  double sigma, NoiseKind noise_kind,
                                  std::optional<EnsembleMode> mode, std::uint64_t seed);

BinaryInstance generate_binary_instance(std::size_t n, std::size_t k, std::size_t kprime,
                                        std::size_t m, double sigma, NoiseKind noise_kind,
                                        std::optional<EnsembleMode> mode, std::uint64_t seed);

/// Signal with one spike of magnitude mu0 and k-1 equal entries, random support and signs.
DenseVector spike_signal(std::size_t n, std::size_t k, double mu0, std::uint64_t seed);
/// k distinct indices drawn uniformly from [0, n), in draw order.
std::vector<std::size_t> random_support(std::size_t n, std::size_t k, std::uint64_t seed,
                                        std::uint64_t stream);
/// m noise draws, each sigma times a unit draw of the given kind.
std::vector<double> draw_noise(std::size_t m, double sigma, NoiseKind kind, std::uint64_t seed);

/// x^T A_i x.
double measure(const SensingEnsemble& e, const DenseVector& x, std::size_t i);
double measure(EnsembleAccess& acc, const DenseVector& x, std::size_t i);

/// (1/m) sum_i (x^T A_i x - b_i)^2.
double empirical_risk(const ProblemInstance& inst, const DenseVector& x);
double empirical_risk(EnsembleAccess& acc, std::span<const double> b, const DenseVector& x);

/// Residuals x^T A_i x - b_i for all i.
std::vector<double> residuals(EnsembleAccess& acc, std::span<const double> b,
                              const DenseVector& x);

/// (2/m) sum_i (x^T A_i x - b_i)(A_i x + A_i^T x).
DenseVector risk_gradient(const ProblemInstance& inst, const DenseVector& x);

struct RiskAndGradient {
  double risk;
  double residual_sq_sum;  // sum_i r_i^2
  DenseVector gradient;
};
RiskAndGradient risk_and_gradient(EnsembleAccess& acc, std::span<const double> b,
                                  const DenseVector& x);

/// Lower bound on the rank-r, s-sparse restricted isometry constant:
/// max over random doubly-sparse unit-Frobenius X of | ||A(X)||^2 - 1 |,
/// A(X)_i = <A_i, X> / sqrt(m).
double rip_estimate(const SensingEnsemble& e, std::size_t sparsity, std::size_t rank,
                    std::size_t trials, std::uint64_t seed);

}  // namespace qsense::sensing
