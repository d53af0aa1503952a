#include "qsense/ogp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qsense/error.hpp"
#include "qsense/random.hpp"

namespace qsense::ogp {

namespace {

double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Advances a sorted combination of indices into [0, pool) in lexicographic order.
bool next_combination(std::vector<std::size_t>& c, std::size_t pool) {
  const std::size_t r = c.size();
  for (std::size_t j = r; j-- > 0;) {
    if (c[j] < pool - r + j) {
      ++c[j];
      for (std::size_t q = j + 1; q < r; ++q) c[q] = c[q - 1] + 1;
      return true;
    }
  }
  return false;
}

std::vector<std::size_t> first_combination(std::size_t r) {
  std::vector<std::size_t> c(r);
  std::iota(c.begin(), c.end(), 0);
  return c;
}

struct Enumerator {
  const sensing::BinaryInstance& inst;
  std::vector<std::size_t> on, off;

  explicit Enumerator(const sensing::BinaryInstance& b) : inst(b) {
    const auto& x0 = b.problem.x0;
    for (std::size_t i = 0; i < x0.size(); ++i) (x0[i] != 0.0 ? on : off).push_back(i);
  }

  // Risk of the binary vector with the given sorted support.
  double risk(const std::vector<std::size_t>& t) const {
    const auto& p = inst.problem;
    double s = 0.0;
    for (std::size_t i = 0; i < p.m; ++i) {
      double q = 0.0;
      for (std::size_t r : t) {
        double row_sum = 0.0;
        for (std::size_t c : t) row_sum += p.ensemble.entry(i, r, c);
        q += row_sum;
      }
      const double d = q - p.b[i];
      s += d * d;
    }
    return s / static_cast<double>(p.m);
  }

  template <class Visit>
  void for_each(std::size_t ell, Visit&& visit) const {
    const std::size_t kp = inst.kprime;
    const std::size_t rest = kp - ell;
    auto ci = first_combination(ell);
    std::vector<std::size_t> t(kp);
    do {
      auto cj = first_combination(rest);
      do {
        for (std::size_t a = 0; a < ell; ++a) t[a] = on[ci[a]];
        for (std::size_t a = 0; a < rest; ++a) t[ell + a] = off[cj[a]];
        std::vector<std::size_t> sorted = t;
        std::sort(sorted.begin(), sorted.end());
        visit(sorted);
      } while (rest > 0 && next_combination(cj, off.size()));
    } while (ell > 0 && next_combination(ci, on.size()));
  }
};

void consider(PhiResult& best, double r, const std::vector<std::size_t>& t) {
  if (r < best.phi || (r == best.phi && t < best.argmin)) {
    best.phi = r;
    best.argmin = t;
  }
}

std::uint64_t checked_count(const sensing::BinaryInstance& inst, std::size_t ell,
                            std::uint64_t budget) {
  const auto& p = inst.problem;
  if (ell > std::min(p.k, inst.kprime)) throw InvalidArgument("enumerate_phi: overlap out of range");
  const BigInt count = overlap_count(p.n, p.k, inst.kprime, ell).exact;
  if (count == 0) throw InvalidArgument("enumerate_phi: no candidate has this overlap");
  if (count > budget) {
    const std::uint64_t req = count > std::numeric_limits<std::uint64_t>::max()
                                  ? std::numeric_limits<std::uint64_t>::max()
                                  : count.convert_to<std::uint64_t>();
    throw BudgetExceeded("enumeration needs " + count.str() + " candidates, budget is " +
                             std::to_string(budget),
                         req);
  }
  return count.convert_to<std::uint64_t>();
}

}  // namespace

BigInt binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  BigInt r = 1;
  for (std::uint64_t j = 1; j <= k; ++j) {
    r *= n - k + j;
    r /= j;
  }
  return r;
}

OverlapCount overlap_count(std::size_t n, std::size_t k, std::size_t kprime, std::size_t ell) {
  if (k > n || kprime > n) throw InvalidArgument("overlap_count: need k, k' <= n");
  if (ell > std::min(k, kprime) || kprime - ell > n - k) {
    return {0, -std::numeric_limits<double>::infinity()};
  }
  BigInt exact = binomial(k, ell) * binomial(n - k, kprime - ell);
  const double lv = log_choose(static_cast<double>(k), static_cast<double>(ell)) +
                    log_choose(static_cast<double>(n - k), static_cast<double>(kprime - ell));
  return {std::move(exact), lv};
}

OGPCurve gamma_curve(std::size_t n, std::size_t k, std::size_t kprime, std::size_t m, double alpha) {
  if (m == 0) throw InvalidArgument("gamma_curve: m must be positive");
  if (!(alpha >= 0.0)) throw InvalidArgument("gamma_curve: alpha must be non-negative");
  if (k == 0 || k > n || kprime > n) throw InvalidArgument("gamma_curve: need 1 <= k <= n, k' <= n");
  OGPCurve c{n, k, kprime, m, alpha, {}, {}, {}, {}, 0};
  const std::size_t top = std::min(k, kprime);
  const double kd = static_cast<double>(k), kpd = static_cast<double>(kprime);
  for (std::size_t l = 0; l <= top; ++l) {
    const double ld = static_cast<double>(l);
    const double logn = overlap_count(n, k, kprime, l).log_value;
    c.ell.push_back(l);
    c.logN.push_back(logn);
    if (!std::isfinite(logn)) {
      c.gamma.push_back(0.0);
      c.clamped.push_back(false);
      continue;
    }
    const double factor = 1.0 - 2.0 * std::sqrt((logn + alpha) / static_cast<double>(m));
    const double spread = kpd * kpd + kd * kd - 2.0 * ld * ld;
    const bool clamp = factor < 0.0;
    c.gamma.push_back(std::sqrt(std::max(spread, 0.0) * (clamp ? 0.0 : factor)));
    c.clamped.push_back(clamp);
  }
  c.ell_c = critical_overlap(c.gamma).ell_c;
  return c;
}

CriticalOverlap critical_overlap(const std::vector<double>& gamma) {
  if (gamma.empty()) throw InvalidArgument("critical_overlap: empty curve");
  std::size_t best = 0;
  for (std::size_t l = 1; l < gamma.size(); ++l) {
    if (gamma[l] > gamma[best]) best = l;
  }
  double base = gamma[0];
  if (gamma.size() > 1) base = std::max(base, gamma[1]);
  return {best, gamma[best] - base};
}

CriticalOverlap critical_overlap(const OGPCurve& curve) { return critical_overlap(curve.gamma); }

std::size_t count_local_maxima(const std::vector<double>& v) {
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;
    const bool left = i == 0 || v[i - 1] < v[i];
    const bool right = j + 1 == v.size() || v[j + 1] < v[i];
    if (left && right) ++count;
    i = j + 1;
  }
  return count;
}

PhiResult enumerate_phi(const sensing::BinaryInstance& inst, std::size_t ell,
                        std::uint64_t budget) {
  const std::uint64_t count = checked_count(inst, ell, budget);
  Enumerator en(inst);
  PhiResult best{std::numeric_limits<double>::infinity(), {}, count};
  en.for_each(ell, [&](const std::vector<std::size_t>& t) { consider(best, en.risk(t), t); });
  best.phi = std::sqrt(best.phi);
  return best;
}

PhiResult enumerate_phi_shuffled(const sensing::BinaryInstance& inst, std::size_t ell,
                                 std::uint64_t order_seed, std::uint64_t budget) {
  const std::uint64_t count = checked_count(inst, ell, budget);
  Enumerator en(inst);
  std::vector<std::vector<std::size_t>> all;
  all.reserve(count);
  en.for_each(ell, [&](const std::vector<std::size_t>& t) { all.push_back(t); });
  CounterRng rng(order_seed, stream::kOrder);
  for (std::size_t j = all.size(); j > 1; --j) {
    std::swap(all[j - 1], all[static_cast<std::size_t>(rng.below(j))]);
  }
  PhiResult best{std::numeric_limits<double>::infinity(), {}, count};
  for (const auto& t : all) consider(best, en.risk(t), t);
  best.phi = std::sqrt(best.phi);
  return best;
}

PhiProfile phi_profile(const sensing::BinaryInstance& inst, std::uint64_t budget) {
  const auto& p = inst.problem;
  PhiProfile prof{{}, {}, {}, p.seed};
  for (std::size_t l = 0; l <= std::min(p.k, inst.kprime); ++l) {
    prof.ell.push_back(l);
    if (overlap_count(p.n, p.k, inst.kprime, l).exact == 0) {
      prof.phi.push_back(std::numeric_limits<double>::infinity());
      prof.argmin.emplace_back();
      continue;
    }
    PhiResult r = enumerate_phi(inst, l, budget);
    prof.phi.push_back(r.phi);
    prof.argmin.push_back(std::move(r.argmin));
  }
  return prof;
}

bool ogp_witness(const std::vector<double>& phi, std::size_t l1, std::size_t z1, std::size_t z2,
                 std::size_t l2) {
  if (phi.empty()) throw InvalidArgument("ogp_witness: empty profile");
  const std::size_t k = phi.size() - 1;
  if (!(l1 <= z1 && z1 + 1 < z2 && z2 <= l2 && l2 <= k)) {
    throw InvalidArgument("ogp_witness: need 0 <= l1 <= z1 < z2 - 1 < z2 <= l2 <= k");
  }
  double inner = std::numeric_limits<double>::infinity();
  for (std::size_t l = z1 + 1; l < z2; ++l) inner = std::min(inner, phi[l]);
  return std::max(phi[l1], phi[l2]) < inner;
}

bool ogp_witness(const PhiProfile& profile, std::size_t l1, std::size_t z1, std::size_t z2,
                 std::size_t l2) {
  return ogp_witness(profile.phi, l1, z1, z2, l2);
}

bool any_ogp_witness(const std::vector<double>& phi) {
  const std::size_t len = phi.size();
  for (std::size_t l1 = 0; l1 < len; ++l1) {
    for (std::size_t z1 = l1; z1 < len; ++z1) {
      for (std::size_t z2 = z1 + 2; z2 < len; ++z2) {
        for (std::size_t l2 = z2; l2 < len; ++l2) {
          if (ogp_witness(phi, l1, z1, z2, l2)) return true;
        }
      }
    }
  }
  return false;
}

TailResult chi2_tail_validate(const std::vector<double>& a, double t, std::size_t trials,
                              std::uint64_t seed) {
  if (a.empty()) throw InvalidArgument("chi2_tail_validate: empty weight vector");
  if (!(t > 0.0)) throw InvalidArgument("chi2_tail_validate: t must be positive");
  if (trials < 1000) throw InvalidArgument("chi2_tail_validate: need at least 1000 trials");
  double l2 = 0.0, linf = 0.0;
  for (double w : a) {
    if (!(w >= 0.0)) throw InvalidArgument("chi2_tail_validate: weights must be non-negative");
    l2 += w * w;
    linf = std::max(linf, w);
  }
  l2 = std::sqrt(l2);
  const double et = std::exp(-t);
  const double bound = et * (1.0 + 3.0 / std::sqrt(static_cast<double>(trials) * et));
  if (linf == 0.0) return {0.0, 0.0, bound, true};
  const double up = 2.0 * l2 * std::sqrt(t) + 2.0 * linf * t;
  const double lo = -2.0 * l2 * std::sqrt(t);
  CounterRng rng(seed, stream::kTrials);
  std::size_t hits_up = 0, hits_lo = 0;
  for (std::size_t j = 0; j < trials; ++j) {
    double z = 0.0;
    for (double w : a) {
      const double y = rng.normal();
      z += w * (y * y - 1.0);
    }
    if (z >= up) ++hits_up;
    if (z <= lo) ++hits_lo;
  }
  const double td = static_cast<double>(trials);
  const double fu = static_cast<double>(hits_up) / td, fl = static_cast<double>(hits_lo) / td;
  return {fu, fl, bound, fu <= bound && fl <= bound};
}

InformativeRange informative_range(std::size_t n, std::size_t k, std::size_t m, double c_log) {
  if (!(c_log > 0.0)) throw InvalidArgument("informative_range: C_log must be positive");
  const double md = static_cast<double>(m);
  const double lm = std::log(md);
  if (!(md > c_log * lm)) throw InvalidArgument("informative_range: need m > C_log log m");
  const double ln = std::log(static_cast<double>(n));
  const double kd = static_cast<double>(k);
  const auto kmax = static_cast<std::size_t>(std::floor(md / (c_log * lm)));
  const double cap = std::min(std::cbrt(md) * std::cbrt(kd * kd) * std::cbrt(ln),
                              kd * std::pow(md, 0.25) / ln);
  return {k, kmax, kmax < k, cap};
}

}  // namespace qsense::ogp
