#pragma once

// Landscape of the binary k'-sparse problem: overlap counts, the first-moment
// lower-bound curve, brute-force overlap-restricted minima and the OGP witness.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "qsense/sensing.hpp"

namespace qsense::ogp {

using BigInt = boost::multiprecision::cpp_int;

/// Exact binomial coefficient (0 when k > n).
BigInt binomial(std::uint64_t n, std::uint64_t k);

struct OverlapCount {
  BigInt exact;
  double log_value;  // -inf when the count is zero
};

/// N = C(k, l) * C(n - k, k' - l); zero when infeasible.
OverlapCount overlap_count(std::size_t n, std::size_t k, std::size_t kprime, std::size_t ell);

struct OGPCurve {
  std::size_t n, k, kprime, m;
  double alpha;
  std::vector<std::size_t> ell;
  std::vector<double> logN;
  std::vector<double> gamma;
  std::vector<bool> clamped;
  std::size_t ell_c;
};

/// Gamma(l) = sqrt(((k')^2 + k^2 - 2 l^2) * max(0, 1 - 2 sqrt((log N + alpha)/m))).
OGPCurve gamma_curve(std::size_t n, std::size_t k, std::size_t kprime, std::size_t m, double alpha);

struct CriticalOverlap {
  std::size_t ell_c;
  double gap_lower;  // Gamma(ell_c) - max(Gamma(0), Gamma(1))
};
CriticalOverlap critical_overlap(const std::vector<double>& gamma);
CriticalOverlap critical_overlap(const OGPCurve& curve);

/// Number of local maxima of a sequence (plateaus count once).
std::size_t count_local_maxima(const std::vector<double>& v);

inline constexpr std::uint64_t kDefaultBudget = 10'000'000;

struct PhiResult {
  double phi;
  std::vector<std::size_t> argmin;  // support of the minimizer, ascending
  std::uint64_t candidates;
};

/// min over binary k'-sparse x with |supp(x) & supp(x0)| = l of sqrt(R(x)).
/// Candidates are visited lexicographically: on-support combinations outer,
/// off-support combinations inner. Throws BudgetExceeded when the count
/// exceeds budget.
PhiResult enumerate_phi(const sensing::BinaryInstance& inst, std::size_t ell,
                        std::uint64_t budget = kDefaultBudget);

/// Same minimum over the same candidate set visited in a shuffled order.
PhiResult enumerate_phi_shuffled(const sensing::BinaryInstance& inst, std::size_t ell,
                                 std::uint64_t order_seed, std::uint64_t budget = kDefaultBudget);

struct PhiProfile {
  std::vector<std::size_t> ell;
  std::vector<double> phi;
  std::vector<std::vector<std::size_t>> argmin;
  std::uint64_t seed;
};

/// Profile over l = 0..min(k, k'); infeasible overlaps get phi = +inf.
PhiProfile phi_profile(const sensing::BinaryInstance& inst, std::uint64_t budget = kDefaultBudget);

/// max(phi(l1), phi(l2)) < min over z1 < l < z2 of phi(l).
/// Requires 0 <= l1 <= z1 < z2 - 1 < z2 <= l2 <= (profile length - 1).
bool ogp_witness(const std::vector<double>& phi, std::size_t l1, std::size_t z1, std::size_t z2,
                 std::size_t l2);
bool ogp_witness(const PhiProfile& profile, std::size_t l1, std::size_t z1, std::size_t z2,
                 std::size_t l2);
/// True when some admissible (l1, z1, z2, l2) is a witness.
bool any_ogp_witness(const std::vector<double>& phi);

struct TailResult {
  double upper_emp;
  double lower_emp;
  double bound;  // e^{-t} (1 + 3 / sqrt(trials e^{-t}))
  bool pass;
};

/// Empirical tails of Z = sum a_i (Y_i^2 - 1) against the chi-squared
/// concentration bounds 2||a||_2 sqrt(t) + 2||a||_inf t and -2||a||_2 sqrt(t).
TailResult chi2_tail_validate(const std::vector<double>& a, double t, std::size_t trials,
                              std::uint64_t seed);

struct InformativeRange {
  std::size_t kprime_min;
  std::size_t kprime_max;
  bool empty;
  double theorem_cap;  // m^{1/3} k^{2/3} log^{1/3} n  min  k m^{1/4} / log n
};

InformativeRange informative_range(std::size_t n, std::size_t k, std::size_t m, double c_log);

}  // namespace qsense::ogp
