// Desk-scale calibration of the tunable constants. Prints markdown tables;
// the numbers recorded in docs/calibration.md come from this program.

#include <cmath>
#include <cstdio>
#include <vector>

#include "qsense/error.hpp"
#include "qsense/init_quadratic.hpp"
#include "qsense/phase_retrieval.hpp"
#include "qsense/sensing.hpp"
#include "qsense/tgd.hpp"

using namespace qsense;
using sensing::EnsembleMode;
using sensing::NoiseKind;

namespace {

struct SupportStats {
  int subset = 0, exact = 0, near = 0, empty = 0;
  double false_pos = 0.0, hits = 0.0;
};

SupportStats score(const IndexSet& s, const DenseVector& x0, SupportStats st) {
  std::size_t fp = 0, hit = 0;
  for (std::size_t l : s) (x0[l] != 0.0 ? hit : fp) += 1;
  st.false_pos += static_cast<double>(fp);
  st.hits += static_cast<double>(hit);
  if (fp == 0) ++st.subset;
  if (fp == 0 && hit == x0.nnz()) ++st.exact;
  if (fp == 0 && hit + 1 >= x0.nnz()) ++st.near;
  return st;
}

void quadratic_support() {
  const std::size_t n = 50, k = 5, m = 2000, seeds = 50;
  std::printf("## init_quadratic support threshold (n=%zu k=%zu m=%zu mu0=0.8, %zu seeds)\n\n", n, k,
              m, seeds);
  std::printf("| C_thr | subset of supp | exact | mean false pos | mean true hits | empty |\n");
  std::printf("|---|---|---|---|---|---|\n");
  std::vector<sensing::ProblemInstance> insts;
  for (std::size_t s = 0; s < seeds; ++s)
    insts.push_back(sensing::generate_instance(n, k, m, 0.8, 0.0, NoiseKind::none,
                                               EnsembleMode::materialized, 1000 + s));
  for (double c : {1.0, 2.0, 3.0, 4.0, 5.0}) {
    SupportStats st;
    for (const auto& inst : insts) {
      const auto piv = init::select_pivot(init::diag_estimate(inst));
      const auto y = init::column_estimate(inst, piv.index);
      try {
        st = score(init::support_select(y, init::norm_estimate(inst), m, c), inst.x0, st);
      } catch (const DegenerateSupport&) {
        ++st.empty;
      }
    }
    std::printf("| %.1f | %d/%zu | %d/%zu | %.2f | %.2f | %d |\n", c, st.subset, seeds, st.exact,
                seeds, st.false_pos / seeds, st.hits / seeds, st.empty);
  }
  std::printf("\n");
}

void pr_support() {
  const std::size_t n = 100, k = 5, m = 5000, seeds = 50;
  std::printf("## pr_init support threshold (n=%zu k=%zu m=%zu mu0=0.8, %zu seeds)\n\n", n, k, m,
              seeds);
  std::printf("| C_thr | subset and >= k-1 | exact | mean false pos | mean true hits |\n");
  std::printf("|---|---|---|---|---|\n");
  std::vector<pr::PRInstance> insts;
  for (std::size_t s = 0; s < seeds; ++s)
    insts.push_back(pr::generate_pr_instance(n, k, m, 0.8, 0.0, NoiseKind::none, std::nullopt,
                                             2000 + s));
  for (double c : {0.05, 0.1, 0.15, 0.2, 0.3}) {
    SupportStats st;
    for (const auto& inst : insts) st = score(pr::pr_support(inst, pr::pr_pivot(inst), c), inst.x0, st);
    std::printf("| %.2f | %d/%zu | %d/%zu | %.2f | %.2f |\n", c, st.near, seeds, st.exact, seeds,
                st.false_pos / seeds, st.hits / seeds);
  }
  std::printf("\n");
}

void tgd_threshold() {
  const std::size_t n = 100, k = 5, m = 3000, seeds = 5;
  std::printf("## TGD threshold constant (n=%zu k=%zu m=%zu mu0=0.8, sigma=0 and 0.01, %zu seeds)\n\n",
              n, k, m, seeds);
  std::printf("| C_tau | sigma | error <= 1e-4 | median final error | median nnz | median iterations |\n");
  std::printf("|---|---|---|---|---|---|\n");
  for (double sigma : {0.0, 0.01}) {
    std::vector<sensing::ProblemInstance> insts;
    std::vector<DenseVector> starts;
    for (std::size_t s = 0; s < seeds; ++s) {
      insts.push_back(sensing::generate_instance(n, k, m, 0.8, sigma, NoiseKind::gaussian,
                                                 std::nullopt, 3000 + s));
      starts.push_back(init::initialize(insts.back()).x_init);
    }
    for (double c : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      std::vector<double> errs, nnz, its;
      int ok = 0;
      for (std::size_t s = 0; s < seeds; ++s) {
        tgd::TGDConfig cfg;
        cfg.C_tau = c;
        cfg.T_max = 400;
        try {
          const auto tr = tgd::tgd_run(insts[s], starts[s], cfg);
          errs.push_back(tr.final_error());
          nnz.push_back(static_cast<double>(tr.final_iterate().nnz()));
          its.push_back(static_cast<double>(tr.size() - 1));
        } catch (const Divergence&) {
          errs.push_back(INFINITY);
          nnz.push_back(NAN);
          its.push_back(NAN);
        }
        if (errs.back() <= 1e-4) ++ok;
      }
      auto med = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
      };
      std::printf("| %.1f | %.2f | %d/%zu | %.3g | %.0f | %.0f |\n", c, sigma, ok, seeds, med(errs),
                  med(nnz), med(its));
    }
  }
  std::printf("\n");
}

void rip() {
  const std::size_t n = 50, k = 3, seeds = 20;
  const auto m = static_cast<std::size_t>(std::ceil(50.0 * k * std::log(static_cast<double>(n))));
  std::printf("## RIP lower estimate (n=%zu sparsity=%zu rank=1 m=%zu, 200 probes, %zu seeds)\n\n", n,
              k, m, seeds);
  int below = 0;
  double worst = 0.0;
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto e = sensing::SensingEnsemble::materialized(n, m, 4000 + s);
    const double d = sensing::rip_estimate(e, k, 1, 200, 4000 + s);
    worst = std::max(worst, d);
    if (d < 0.5) ++below;
  }
  std::printf("delta_lower < 0.5 in %d/%zu seeds; worst %.3f\n\n", below, seeds, worst);
}

}  // namespace

int main() {
  quadratic_support();
  pr_support();
  rip();
  tgd_threshold();
  return 0;
}
