#pragma once

// Dense kernels shared by every module: vectors, symmetric matrices, index
// sets, thresholding operators and a top-eigenpair solver.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace qsense {

class DenseVector {
 public:
  /// Zero vector of length n (n > 0).
  explicit DenseVector(std::size_t n);
  /// Throws InvalidArgument on empty input or non-finite entries.
  explicit DenseVector(std::vector<double> entries);
  DenseVector(std::initializer_list<double> entries);

  std::size_t size() const noexcept { return data_.size(); }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }

  std::span<const double> view() const noexcept { return data_; }
  std::span<double> view() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double norm() const noexcept;
  double norm_inf() const noexcept;
  std::size_t nnz() const noexcept;
  /// Indices of nonzero entries, ascending.
  std::vector<std::size_t> support() const;

  bool operator==(const DenseVector&) const = default;

 private:
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// min(||x - x0||, ||x + x0||): the natural metric for sign-blind measurements.
double sign_resolved_error(const DenseVector& x, const DenseVector& x0);

/// Flips v so that its first non-negligible coordinate is positive.
void canonicalize_sign(DenseVector& v);

/// Square symmetric matrix, row-major. Symmetrized on construction so that
/// entries[i][j] == entries[j][i] holds bitwise.
class DenseSymMatrix {
 public:
  explicit DenseSymMatrix(std::size_t n);
  /// Row-major n*n input; stored as (M + M^T)/2.
  DenseSymMatrix(std::size_t n, std::vector<double> row_major);
  static DenseSymMatrix identity(std::size_t n);

  std::size_t dim() const noexcept { return n_; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return a_[r * n_ + c]; }
  /// Writes both (r,c) and (c,r).
  void set(std::size_t r, std::size_t c, double value) noexcept;

  void multiply(std::span<const double> x, std::span<double> out) const;
  std::span<const double> row_major() const noexcept { return a_; }

 private:
  std::size_t n_;
  std::vector<double> a_;
};

/// Sorted, duplicate-free indices drawn from [0, universe).
class IndexSet {
 public:
  IndexSet() = default;
  /// Sorts and deduplicates; throws InvalidArgument if an index >= universe.
  IndexSet(std::size_t universe, std::vector<std::size_t> indices);

  std::size_t universe() const noexcept { return universe_; }
  std::size_t size() const noexcept { return idx_.size(); }
  bool empty() const noexcept { return idx_.empty(); }
  bool contains(std::size_t i) const noexcept;
  std::size_t operator[](std::size_t j) const noexcept { return idx_[j]; }
  auto begin() const noexcept { return idx_.begin(); }
  auto end() const noexcept { return idx_.end(); }
  const std::vector<std::size_t>& indices() const noexcept { return idx_; }
  /// Position of i inside the set, or size() if absent.
  std::size_t position(std::size_t i) const noexcept;

  bool operator==(const IndexSet&) const = default;

 private:
  std::size_t universe_ = 0;
  std::vector<std::size_t> idx_;
};

/// Keeps the k largest-magnitude entries; on ties the lower index wins.
DenseVector hard_threshold(const DenseVector& v, std::size_t k);

/// sign(x) * max(|x| - tau, 0) componentwise.
DenseVector soft_threshold(const DenseVector& v, double tau);

struct EigenPair {
  double value;
  DenseVector vector;
  double residual;  // ||Mv - lambda v||
  std::size_t iterations;
};

struct EigenOptions {
  double tol = 1e-10;
  std::size_t max_iter = 50000;
};

/// Largest-magnitude eigenpair of a symmetric matrix by power iteration.
///
/// The returned pair satisfies ||Mv - lambda v|| <= tol * max(1, |lambda|).
/// When the dominant magnitude is shared by +lambda and -lambda the plain
/// iteration oscillates; this is detected from the two-step residual and the
/// two ends of the spectrum are then isolated with shifts (M +/- |lambda| I).
/// A stagnating run is restarted once from a fresh random vector before
/// ConvergenceFailure is thrown. The eigenvector is sign-canonicalized.
EigenPair top_eigpair(const DenseSymMatrix& m, const EigenOptions& options = {});

DenseVector restrict(const DenseVector& v, const IndexSet& s);
DenseSymMatrix restrict(const DenseSymMatrix& m, const IndexSet& s);
/// Inverse of restrict for vectors: places sub[j] at s[j], zero elsewhere.
DenseVector embed(const DenseVector& sub, const IndexSet& s);

}  // namespace qsense
