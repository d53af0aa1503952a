#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "qsense/cli.hpp"
#include "qsense/error.hpp"
#include "qsense/init_quadratic.hpp"
#include "qsense/instance_io.hpp"
#include "qsense/ogp.hpp"
#include "qsense/parallel.hpp"
#include "qsense/phase_retrieval.hpp"
#include "qsense/random.hpp"
#include "qsense/sensing.hpp"
#include "qsense/spf.hpp"
#include "qsense/tgd.hpp"

namespace qsense::cli {

namespace {

using sensing::EnsembleMode;
using sensing::NoiseKind;
using sensing::ProblemInstance;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// ---------------------------------------------------------------- options

struct Common {
  std::uint64_t seed = 0;
  bool timing = false;
  std::string config;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Base seed; drawn from entropy and reported when omitted");
  sub->add_flag("--timing", c.timing, "Add wall-clock columns (output is then not reproducible)");
  sub->add_option("--config", c.config, "Flat key=value file; explicit flags take precedence");
}

void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  const Config cfg = load_config(path);
  for (const auto& [key, value] : cfg) {
    if (key == "config") throw UsageError("config files cannot include other config files");
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw UsageError("unknown config key '" + key + "' for command '" + sub->get_name() + "'");
    }
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

void require(CLI::App* sub, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    if (sub->get_option(name)->count() == 0) {
      throw UsageError(std::string("missing required flag ") + name);
    }
  }
}

std::uint64_t resolve_seed(CLI::App* sub, const Common& c, std::ostream& err) {
  if (sub->get_option("--seed")->count() > 0) return c.seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  err << "qsense: no --seed given; using seed=" << s << '\n';
  return s;
}

struct InstanceSpec {
  std::size_t n = 0, k = 0, m = 0;
  double mu0 = kNaN;
  double sigma = 0.0;
  std::string noise = "gaussian";
  std::string mode = "auto";

  double mu0_or_flat(std::size_t kk) const {
    return std::isnan(mu0) ? 1.0 / std::sqrt(static_cast<double>(kk)) : mu0;
  }
  NoiseKind noise_kind() const { return sensing::parse_noise(noise); }
  std::optional<EnsembleMode> ensemble_mode() const {
    if (mode == "auto") return std::nullopt;
    return sensing::parse_mode(mode);
  }
};

void add_instance_opts(CLI::App* sub, InstanceSpec& s) {
  sub->add_option("--n", s.n, "Ambient dimension")->check(CLI::PositiveNumber);
  sub->add_option("--k", s.k, "Sparsity")->check(CLI::PositiveNumber);
  sub->add_option("--m", s.m, "Number of measurements")->check(CLI::PositiveNumber);
  sub->add_option("--mu0", s.mu0, "Incoherence target in [1/sqrt(k), 1]; default 1/sqrt(k)");
  sub->add_option("--sigma", s.sigma, "Noise scale")->check(CLI::NonNegativeNumber);
  sub->add_option("--noise", s.noise, "Noise kind")
      ->check(CLI::IsMember({"gaussian", "laplace", "none"}));
  sub->add_option("--mode", s.mode, "Ensemble storage")
      ->check(CLI::IsMember({"auto", "materialized", "streamed"}));
}

struct AlgoParams {
  double c_thr = kNaN;
  double eta = 0.04;
  double c_tau = 2.0;
  std::size_t L = 25;
  std::size_t t_max = 0;
  double tol = 1e-10;

  double c_thr_for(const std::string& algo) const {
    if (!std::isnan(c_thr)) return c_thr;
    return algo == "pr-init" ? pr::kDefaultPrCThr : init::kDefaultCThr;
  }
  std::size_t t_max_for(const std::string& algo) const {
    if (t_max > 0) return t_max;
    return algo == "spf" ? spf::SPFConfig{}.T_max : tgd::TGDConfig{}.T_max;
  }
};

void add_algo_opts(CLI::App* sub, AlgoParams& p) {
  sub->add_option("--c-thr", p.c_thr, "Support threshold constant (default 3 for init, 0.15 for pr-init)");
  sub->add_option("--eta", p.eta, "TGD step size");
  sub->add_option("--c-tau", p.c_tau, "TGD threshold constant");
  sub->add_option("--L", p.L, "IHT iterations per SPF step")->check(CLI::PositiveNumber);
  sub->add_option("--t-max", p.t_max, "Iteration cap (default 50 for spf, 1000 for tgd)");
  sub->add_option("--tol", p.tol, "Stopping tolerance")->check(CLI::NonNegativeNumber);
}

void validate_algo(const std::string& algo, const AlgoParams& p) {
  if (algo == "tgd") {
    tgd::TGDConfig c;
    c.eta = p.eta;
    c.C_tau = p.c_tau;
    c.tol = p.tol;
    c.validate();
  }
  if (!(p.c_thr_for(algo) >= 0.0)) throw InvalidArgument("--c-thr must be non-negative");
}

// ---------------------------------------------------------------- run cells

struct Record {
  std::string algorithm;
  std::size_t n = 0, k = 0, m = 0;
  double mu0 = 0.0, sigma = 0.0;
  std::string noise, mode;
  std::uint64_t seed = 0;
  double c_thr = 0.0;
  double final_error = kNaN;
  double final_risk = kNaN;
  std::size_t iterations = 0;
  std::size_t support_size = 0;
  std::string stop_reason;
  double wall_time = 0.0;
  std::vector<double> trace_errors, trace_risks;
};

double relative_error(const DenseVector& x, const DenseVector& x0) {
  const double nx0 = x0.norm();
  const double e = sign_resolved_error(x, x0);
  return nx0 > 0.0 ? e / nx0 : e;
}

double pr_risk(const pr::PRInstance& inst, const DenseVector& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < inst.m; ++i) {
    const double r = pr::pr_measure(inst, x, i) - inst.b[i];
    s += r * r;
  }
  return s / static_cast<double>(inst.m);
}

void fill_from_trace(Record& rec, const RecoveryTrace& tr, const DenseVector& x0) {
  rec.iterations = tr.size() - 1;
  rec.final_error = relative_error(tr.final_iterate(), x0);
  rec.final_risk = tr.risks.back();
  rec.support_size = tr.final_iterate().nnz();
  rec.stop_reason = to_string(tr.stop_reason);
  const double nx0 = x0.norm() > 0.0 ? x0.norm() : 1.0;
  for (double e : tr.errors) rec.trace_errors.push_back(e / nx0);
  rec.trace_risks = tr.risks;
}

// Runs a quadratic-measurement algorithm; algorithm-level failures become stop reasons.
void run_quadratic(Record& rec, const ProblemInstance& inst, const std::string& algo,
                   const AlgoParams& p, std::size_t cache_bytes) {
  sensing::EnsembleAccess acc(inst.ensemble, cache_bytes);
  std::optional<init::InitEstimate> found;
  try {
    found = init::initialize(acc, inst, rec.c_thr);
  } catch (const DegenerateSupport&) {
    rec.stop_reason = "degenerate_support";
    return;
  } catch (const DegenerateInstance&) {
    rec.stop_reason = "degenerate_instance";
    return;
  } catch (const ConvergenceFailure&) {
    rec.stop_reason = "eigensolver_failure";
    return;
  }
  const init::InitEstimate& est = *found;
  if (algo == "init") {
    rec.final_error = relative_error(est.x_init, inst.x0);
    rec.final_risk = sensing::empirical_risk(acc, inst.b, est.x_init);
    rec.support_size = est.support.size();
    rec.stop_reason = "completed";
    rec.trace_errors = {rec.final_error};
    rec.trace_risks = {rec.final_risk};
    return;
  }
  try {
    if (algo == "spf") {
      spf::SPFConfig cfg;
      cfg.T_max = p.t_max_for(algo);
      cfg.L = p.L;
      cfg.tol = p.tol;
      fill_from_trace(rec, spf::spf_run(acc, inst, est.x_init, cfg), inst.x0);
    } else {
      tgd::TGDConfig cfg;
      cfg.eta = p.eta;
      cfg.C_tau = p.c_tau;
      cfg.T_max = p.t_max_for(algo);
      cfg.tol = p.tol;
      fill_from_trace(rec, tgd::tgd_run(acc, inst, est.x_init, cfg), inst.x0);
    }
  } catch (const DegenerateIterate& e) {
    fill_from_trace(rec, e.trace(), inst.x0);
    rec.stop_reason = "degenerate_iterate";
  } catch (const Divergence& e) {
    fill_from_trace(rec, e.trace(), inst.x0);
    rec.stop_reason = "divergence";
  }
}

void run_pr(Record& rec, const pr::PRInstance& inst) {
  try {
    const auto est = pr::pr_initialize(inst, rec.c_thr);
    rec.final_error = relative_error(est.x_init, inst.x0);
    rec.final_risk = pr_risk(inst, est.x_init);
    rec.support_size = est.support.size();
    rec.stop_reason = "completed";
    rec.trace_errors = {rec.final_error};
    rec.trace_risks = {rec.final_risk};
  } catch (const ConvergenceFailure&) {
    rec.stop_reason = "eigensolver_failure";
  }
}

struct Cell {
  std::string algorithm;
  std::size_t n, k, m;
  double mu0, sigma;
  std::string noise, mode;
  std::uint64_t seed;
};

Record run_cell(const Cell& c, const AlgoParams& p, std::size_t cache_bytes) {
  const auto t0 = std::chrono::steady_clock::now();
  Record rec;
  rec.algorithm = c.algorithm;
  rec.n = c.n;
  rec.k = c.k;
  rec.m = c.m;
  rec.mu0 = c.mu0;
  rec.sigma = c.sigma;
  rec.noise = c.noise;
  rec.seed = c.seed;
  rec.c_thr = p.c_thr_for(c.algorithm);
  const auto mode = c.mode == "auto" ? std::optional<EnsembleMode>{} : sensing::parse_mode(c.mode);
  const NoiseKind noise = sensing::parse_noise(c.noise);
  if (c.algorithm == "pr-init") {
    const auto inst = pr::generate_pr_instance(c.n, c.k, c.m, c.mu0, c.sigma, noise, mode, c.seed);
    rec.mode = sensing::to_string(inst.mode);
    run_pr(rec, inst);
  } else {
    const auto inst = sensing::generate_instance(c.n, c.k, c.m, c.mu0, c.sigma, noise, mode, c.seed);
    rec.mode = sensing::to_string(inst.ensemble.mode());
    run_quadratic(rec, inst, c.algorithm, p, cache_bytes);
  }
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

void check_cell(const Cell& c) {
  if (c.k > c.n) throw InvalidArgument("need k <= n (k=" + std::to_string(c.k) + ", n=" + std::to_string(c.n) + ")");
  const double lo = 1.0 / std::sqrt(static_cast<double>(c.k));
  if (!(c.mu0 >= lo - 1e-15 && c.mu0 <= 1.0)) {
    throw InvalidArgument("mu0=" + num(c.mu0) + " outside [1/sqrt(k), 1] for k=" + std::to_string(c.k));
  }
}

std::size_t cache_per_worker(std::size_t workers) {
  return sensing::EnsembleAccess::kDefaultCacheBytes / std::max<std::size_t>(workers, 1);
}

void write_run_header(std::ostream& out, bool timing) {
  out << "schema_version,algorithm,n,k,m,mu0,sigma,noise,mode,seed,c_thr,eta,c_tau,L,t_max,tol,"
         "final_error,final_risk,iterations,support_size,stop_reason";
  if (timing) out << ",wall_time";
  out << '\n';
}

void write_run_row(std::ostream& out, const Record& r, const AlgoParams& p, bool timing) {
  out << kSchemaVersion << ',' << r.algorithm << ',' << r.n << ',' << r.k << ',' << r.m << ','
      << num(r.mu0) << ',' << num(r.sigma) << ',' << r.noise << ',' << r.mode << ',' << r.seed
      << ',' << num(r.c_thr) << ',' << num(p.eta) << ',' << num(p.c_tau) << ',' << p.L << ','
      << p.t_max_for(r.algorithm) << ',' << num(p.tol) << ',' << num(r.final_error) << ','
      << num(r.final_risk) << ',' << r.iterations << ',' << r.support_size << ','
      << r.stop_reason;
  if (timing) out << ',' << num(r.wall_time);
  out << '\n';
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

void close_out(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f) throw IoError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  Common common;
  InstanceSpec spec;
  std::string format = "quadratic";
  std::size_t kprime = 0;
  std::string out;
};

int cmd_gen(CLI::App* sub, GenArgs& a, std::ostream& out, std::ostream& err) {
  apply_config(sub, a.common.config);
  require(sub, {"--n", "--k", "--m", "--out"});
  const std::uint64_t seed = resolve_seed(sub, a.common, err);
  const auto& s = a.spec;
  std::string checksum_of;
  if (a.format == "binary") {
    require(sub, {"--kprime"});
    const auto inst = sensing::generate_binary_instance(s.n, s.k, a.kprime, s.m, s.sigma,
                                                        s.noise_kind(), s.ensemble_mode(), seed);
    io::save(a.out, inst);
  } else if (a.format == "pr") {
    const auto inst = pr::generate_pr_instance(s.n, s.k, s.m, s.mu0_or_flat(s.k), s.sigma,
                                               s.noise_kind(), s.ensemble_mode(), seed);
    io::save(a.out, inst);
  } else {
    const auto inst = sensing::generate_instance(s.n, s.k, s.m, s.mu0_or_flat(s.k), s.sigma,
                                                 s.noise_kind(), s.ensemble_mode(), seed);
    io::save(a.out, inst);
  }
  const io::Header h = io::read_header(a.out);
  out << "wrote " << a.out << " format=" << a.format << " mode=" << h.fields.at("mode")
      << " seed=" << seed << " b_fnv1a=" << h.fields.at("b_fnv1a") << '\n';
  return kOk;
}

// ---------------------------------------------------------------- run

struct RunArgs {
  Common common;
  InstanceSpec spec;
  AlgoParams algo;
  std::string algorithm;
  std::string instance;
  std::size_t seeds = 1;
  std::string trace;
};

void write_trace(const std::string& path, const std::vector<Record>& recs) {
  auto f = open_out(path);
  f << "schema_version,seed,iteration,error,risk\n";
  for (const auto& r : recs) {
    for (std::size_t t = 0; t < r.trace_errors.size(); ++t) {
      f << kSchemaVersion << ',' << r.seed << ',' << t << ',' << num(r.trace_errors[t]) << ','
        << num(r.trace_risks[t]) << '\n';
    }
  }
  close_out(f, path);
}

int cmd_run(CLI::App* sub, RunArgs& a, std::ostream& out, std::ostream& err) {
  apply_config(sub, a.common.config);
  validate_algo(a.algorithm, a.algo);
  std::vector<Record> recs;
  const std::size_t workers = worker_count();

  if (!a.instance.empty()) {
    for (const char* f : {"--n", "--k", "--m", "--mu0", "--sigma", "--noise", "--mode", "--seed"}) {
      if (sub->get_option(f)->count() > 0) {
        throw UsageError(std::string(f) + " cannot be combined with --instance");
      }
    }
    if (a.seeds != 1) throw UsageError("--seeds cannot be combined with --instance");
    const auto t0 = std::chrono::steady_clock::now();
    io::AnyInstance any = io::load(a.instance);
    Record rec;
    rec.algorithm = a.algorithm;
    rec.c_thr = a.algo.c_thr_for(a.algorithm);
    auto describe = [&](std::size_t n, std::size_t k, std::size_t m, double mu0, double sigma,
                        NoiseKind noise, EnsembleMode mode, std::uint64_t seed) {
      rec.n = n;
      rec.k = k;
      rec.m = m;
      rec.mu0 = mu0;
      rec.sigma = sigma;
      rec.noise = sensing::to_string(noise);
      rec.mode = sensing::to_string(mode);
      rec.seed = seed;
    };
    if (a.algorithm == "pr-init") {
      auto* inst = std::get_if<pr::PRInstance>(&any);
      if (inst == nullptr) throw UsageError("pr-init needs an instance of format 'pr'");
      describe(inst->n, inst->k, inst->m, inst->mu0_target, inst->sigma, inst->noise_kind,
               inst->mode, inst->seed);
      run_pr(rec, *inst);
    } else {
      auto* inst = std::get_if<ProblemInstance>(&any);
      if (inst == nullptr) throw UsageError(a.algorithm + " needs an instance of format 'quadratic'");
      describe(inst->n, inst->k, inst->m, inst->mu0_target, inst->sigma, inst->noise_kind,
               inst->ensemble.mode(), inst->seed);
      run_quadratic(rec, *inst, a.algorithm, a.algo, cache_per_worker(1));
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    recs.push_back(std::move(rec));
  } else {
    require(sub, {"--n", "--k", "--m"});
    if (a.seeds == 0) throw UsageError("--seeds must be at least 1");
    const std::uint64_t base = resolve_seed(sub, a.common, err);
    const auto& s = a.spec;
    std::vector<Cell> cells;
    for (std::size_t j = 0; j < a.seeds; ++j) {
      cells.push_back({a.algorithm, s.n, s.k, s.m, s.mu0_or_flat(s.k), s.sigma, s.noise, s.mode,
                       base + j});
      check_cell(cells.back());
    }
    recs.resize(cells.size());
    const std::size_t cache = cache_per_worker(workers);
    parallel_for(cells.size(), workers,
                 [&](std::size_t j) { recs[j] = run_cell(cells[j], a.algo, cache); });
  }

  write_run_header(out, a.common.timing);
  for (const auto& r : recs) write_run_row(out, r, a.algo, a.common.timing);
  if (!a.trace.empty()) write_trace(a.trace, recs);
  return kOk;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  Common common;
  AlgoParams algo;
  std::string algorithm;
  std::vector<std::size_t> n, k, m;
  std::vector<double> mu0, sigma{0.0};
  std::string noise = "gaussian";
  std::string mode = "auto";
  std::size_t seeds = 10;
  double success = 1e-3;
};

double median(std::vector<double> v) {
  for (double& x : v)
    if (std::isnan(x)) x = std::numeric_limits<double>::infinity();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  if (v.size() % 2 == 1) return v[h];
  return 0.5 * (v[h - 1] + v[h]);
}

int cmd_sweep(CLI::App* sub, SweepArgs& a, std::ostream& out, std::ostream& err) {
  apply_config(sub, a.common.config);
  require(sub, {"--algorithm", "--n", "--k", "--m"});
  validate_algo(a.algorithm, a.algo);
  if (a.seeds == 0) throw UsageError("--seeds must be at least 1");
  if (a.n.empty() || a.k.empty() || a.m.empty() || a.sigma.empty()) {
    throw UsageError("grids must be nonempty");
  }
  const std::uint64_t base = resolve_seed(sub, a.common, err);

  struct Point {
    std::size_t n, k, m;
    double mu0, sigma;
  };
  std::vector<Point> grid;
  for (std::size_t n : a.n)
    for (std::size_t k : a.k) {
      std::vector<double> mus = a.mu0;
      if (mus.empty()) mus.push_back(1.0 / std::sqrt(static_cast<double>(k)));
      for (std::size_t m : a.m)
        for (double mu : mus)
          for (double sg : a.sigma) grid.push_back({n, k, m, mu, sg});
    }

  std::vector<Cell> cells;
  for (const auto& g : grid) {
    for (std::size_t j = 0; j < a.seeds; ++j) {
      cells.push_back({a.algorithm, g.n, g.k, g.m, g.mu0, g.sigma, a.noise, a.mode, base + j});
      check_cell(cells.back());
      if (!(g.sigma >= 0.0)) throw InvalidArgument("sigma must be non-negative");
    }
  }
  const std::size_t workers = worker_count();
  std::vector<double> errors(cells.size());
  const std::size_t cache = cache_per_worker(workers);
  parallel_for(cells.size(), workers,
               [&](std::size_t j) { errors[j] = run_cell(cells[j], a.algo, cache).final_error; });

  out << "schema_version,n,k,m,mu0,sigma,algorithm,success_rate,median_error,seeds\n";
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> e(errors.begin() + static_cast<std::ptrdiff_t>(g * a.seeds),
                          errors.begin() + static_cast<std::ptrdiff_t>((g + 1) * a.seeds));
    std::size_t ok = 0;
    for (double x : e)
      if (x <= a.success) ++ok;
    const auto& p = grid[g];
    out << kSchemaVersion << ',' << p.n << ',' << p.k << ',' << p.m << ',' << num(p.mu0) << ','
        << num(p.sigma) << ',' << a.algorithm << ','
        << num(static_cast<double>(ok) / static_cast<double>(a.seeds)) << ',' << num(median(e))
        << ',' << a.seeds << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- ogp

struct OgpArgs {
  Common common;
  std::size_t n = 0, k = 0, kprime = 0, m = 0;
  double sigma = 0.0;
  std::string noise = "none";
  double alpha = kNaN;
  std::size_t trials = 1;
  std::uint64_t budget = ogp::kDefaultBudget;
  std::string curve_out, profile_out;
};

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (j) s += ' ';
    s += std::to_string(v[j]);
  }
  return s;
}

int cmd_ogp(CLI::App* sub, OgpArgs& a, std::ostream& out, std::ostream& err) {
  apply_config(sub, a.common.config);
  require(sub, {"--n", "--k", "--kprime", "--m"});
  if (a.trials == 0) throw UsageError("--trials must be at least 1");
  if (a.k == 0 || a.k > a.kprime || a.kprime > a.n) throw InvalidArgument("need 1 <= k <= k' <= n");
  if (a.n > 64) throw InvalidArgument("ogp: n must be at most 64");
  const double alpha = std::isnan(a.alpha) ? std::log(static_cast<double>(a.k)) : a.alpha;
  const std::uint64_t base = resolve_seed(sub, a.common, err);

  ogp::BigInt total = 0;
  for (std::size_t l = 0; l <= std::min(a.k, a.kprime); ++l)
    total += ogp::overlap_count(a.n, a.k, a.kprime, l).exact;
  if (total > a.budget) {
    throw BudgetExceeded("ogp: one profile needs " + total.str() + " candidates, budget is " +
                             std::to_string(a.budget),
                         total > std::numeric_limits<std::uint64_t>::max()
                             ? std::numeric_limits<std::uint64_t>::max()
                             : static_cast<std::uint64_t>(total));
  }

  const ogp::OGPCurve curve = ogp::gamma_curve(a.n, a.k, a.kprime, a.m, alpha);
  const auto co = ogp::critical_overlap(curve);
  const NoiseKind noise = sensing::parse_noise(a.noise);

  std::vector<ogp::PhiProfile> profiles(a.trials);
  parallel_for(a.trials, worker_count(), [&](std::size_t t) {
    const auto inst = sensing::generate_binary_instance(a.n, a.k, a.kprime, a.m, a.sigma, noise,
                                                        EnsembleMode::materialized, base + t);
    profiles[t] = ogp::phi_profile(inst, a.budget);
  });

  std::size_t passes = 0, witnesses = 0;
  std::ostringstream prof;
  prof << "schema_version,trial,seed,ell,phi,gamma,above_bound,argmin\n";
  for (std::size_t t = 0; t < a.trials; ++t) {
    const auto& p = profiles[t];
    bool all = true;
    for (std::size_t l = 0; l < p.ell.size(); ++l) {
      const bool above = p.phi[l] >= curve.gamma[l];
      all = all && above;
      prof << kSchemaVersion << ',' << t << ',' << p.seed << ',' << p.ell[l] << ',' << num(p.phi[l])
           << ',' << num(curve.gamma[l]) << ',' << (above ? 1 : 0) << ',' << join(p.argmin[l])
           << '\n';
    }
    if (all) ++passes;
    if (ogp::any_ogp_witness(p.phi)) ++witnesses;
  }

  std::ostringstream cur;
  cur << "schema_version,ell,logN,gamma,clamped\n";
  for (std::size_t l = 0; l < curve.ell.size(); ++l) {
    cur << kSchemaVersion << ',' << curve.ell[l] << ',' << num(curve.logN[l]) << ','
        << num(curve.gamma[l]) << ',' << (curve.clamped[l] ? 1 : 0) << '\n';
  }

  if (a.curve_out.empty()) {
    out << cur.str() << '\n';
  } else {
    auto f = open_out(a.curve_out);
    f << cur.str();
    close_out(f, a.curve_out);
  }
  if (a.profile_out.empty()) {
    out << prof.str() << '\n';
  } else {
    auto f = open_out(a.profile_out);
    f << prof.str();
    close_out(f, a.profile_out);
  }
  out << "summary trials=" << a.trials << " bound_holds=" << passes
      << " pass_fraction=" << num(static_cast<double>(passes) / static_cast<double>(a.trials))
      << " ell_c=" << co.ell_c << " gap_lower=" << num(co.gap_lower)
      << " ogp_witness_trials=" << witnesses << '\n';
  return kOk;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
  Common common;
  std::string suite = "all";
  std::vector<double> t{1.0, 2.0, 4.0};
  std::vector<std::size_t> dims{1, 10, 100};
  std::size_t trials = 100000;
  std::size_t cases = 50;
  std::size_t max_n = 14;
  double slack = 1.0;
};

struct Report {
  std::ostream& out;
  std::size_t passed = 0, failed = 0;
  void line(const std::string& text, bool ok) {
    out << text << " result=" << (ok ? "pass" : "fail") << '\n';
    (ok ? passed : failed) += 1;
  }
};

void suite_chi2(Report& rep, const ValidateArgs& a, std::uint64_t seed) {
  for (double t : a.t) {
    for (std::size_t d : a.dims) {
      if (d == 0) throw InvalidArgument("--dims entries must be positive");
      const auto r = ogp::chi2_tail_validate(std::vector<double>(d, 1.0), t, a.trials, seed);
      const double limit = r.bound * a.slack;
      rep.line("suite=chi2 t=" + num(t) + " D=" + std::to_string(d) + " upper=" + num(r.upper_emp) +
                   " lower=" + num(r.lower_emp) + " bound=" + num(r.bound) + " slack=" + num(a.slack),
               r.upper_emp <= limit && r.lower_emp <= limit);
    }
  }
}

void suite_gradient(Report& rep, const ValidateArgs& a, std::uint64_t seed) {
  CounterRng rng(seed, stream::kTrials);
  double worst = 0.0;
  for (std::size_t c = 0; c < a.cases; ++c) {
    const std::size_t n = 2 + rng.below(7), m = 2 + rng.below(9);
    const std::size_t k = 1 + rng.below(n);
    const auto inst = sensing::generate_instance(n, k, m, 1.0, 0.1, NoiseKind::gaussian,
                                                 EnsembleMode::materialized, seed + c);
    std::vector<double> xv(n);
    for (double& v : xv) v = rng.normal();
    const DenseVector x(xv);
    const DenseVector g = sensing::risk_gradient(inst, x);
    double num2 = 0.0, den2 = 0.0;
    const double h = 1e-5;
    for (std::size_t l = 0; l < n; ++l) {
      DenseVector up = x, dn = x;
      up[l] += h;
      dn[l] -= h;
      const double fd =
          (sensing::empirical_risk(inst, up) - sensing::empirical_risk(inst, dn)) / (2.0 * h);
      num2 += (g[l] - fd) * (g[l] - fd);
      den2 += fd * fd;
    }
    worst = std::max(worst, std::sqrt(num2) / std::max(std::sqrt(den2), 1e-3));
  }
  rep.line("suite=gradient cases=" + std::to_string(a.cases) + " worst_rel_error=" + num(worst),
           worst < 1e-5);
}

void suite_eigen(Report& rep, const ValidateArgs& a, std::uint64_t seed) {
  CounterRng rng(seed, stream::kTrials);
  double worst_res = 0.0;
  bool dominant = true;
  const std::size_t cases = std::max<std::size_t>(a.cases, 1);
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t n = 1 + rng.below(30);
    std::vector<double> raw(n * n);
    for (double& v : raw) v = rng.normal();
    const DenseSymMatrix mat(n, raw);
    const EigenPair ep = top_eigpair(mat);
    worst_res = std::max(worst_res, ep.residual / std::max(1.0, std::abs(ep.value)));
    std::vector<double> x(n), y(n);
    for (int probe = 0; probe < 10; ++probe) {
      for (double& v : x) v = rng.normal();
      mat.multiply(x, y);
      if (norm2(y) > std::abs(ep.value) * norm2(x) * (1.0 + 1e-9)) dominant = false;
    }
  }
  rep.line("suite=eigen cases=" + std::to_string(cases) + " worst_scaled_residual=" + num(worst_res) +
               " dominant=" + (dominant ? "1" : "0"),
           worst_res <= 1e-10 && dominant);
}

void suite_rip(Report& rep, std::uint64_t seed) {
  const auto small = sensing::SensingEnsemble::materialized(20, 200, seed);
  const auto large = sensing::SensingEnsemble::materialized(20, 800, seed);
  const double ds = sensing::rip_estimate(small, 3, 1, 50, seed);
  const double dl = sensing::rip_estimate(large, 3, 1, 50, seed);
  rep.line("suite=rip n=20 s=3 r=1 delta_m200=" + num(ds) + " delta_m800=" + num(dl), dl < ds);
}

void suite_combinatorics(Report& rep, const ValidateArgs& a) {
  if (a.max_n > 24) throw InvalidArgument("--max-n must be at most 24");
  bool ok = true;
  std::size_t checked = 0;
  for (std::size_t n = 1; n <= a.max_n; ++n) {
    for (std::size_t k = 1; k <= std::min<std::size_t>(n, 5); ++k) {
      const std::uint32_t planted = (1u << k) - 1;
      for (std::size_t kp = 0; kp <= std::min<std::size_t>(n, 7); ++kp) {
        std::vector<std::uint64_t> brute(std::min(k, kp) + 1, 0);
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
          if (static_cast<std::size_t>(__builtin_popcount(mask)) != kp) continue;
          ++brute[static_cast<std::size_t>(__builtin_popcount(mask & planted))];
        }
        ogp::BigInt sum = 0;
        for (std::size_t l = 0; l < brute.size(); ++l) {
          const auto oc = ogp::overlap_count(n, k, kp, l);
          ok = ok && oc.exact == brute[l];
          sum += oc.exact;
          ++checked;
        }
        ok = ok && sum == ogp::binomial(n, kp);
      }
    }
  }
  rep.line("suite=combinatorics max_n=" + std::to_string(a.max_n) + " counts_checked=" +
               std::to_string(checked),
           ok);
}

int cmd_validate(CLI::App* sub, ValidateArgs& a, std::ostream& out, std::ostream& err) {
  apply_config(sub, a.common.config);
  const std::uint64_t seed = resolve_seed(sub, a.common, err);
  Report rep{out};
  const bool all = a.suite == "all";
  if (all || a.suite == "chi2") suite_chi2(rep, a, seed);
  if (all || a.suite == "gradient") suite_gradient(rep, a, seed);
  if (all || a.suite == "eigen") suite_eigen(rep, a, seed);
  if (all || a.suite == "rip") suite_rip(rep, seed);
  if (all || a.suite == "combinatorics") suite_combinatorics(rep, a);
  out << "summary passed=" << rep.passed << " failed=" << rep.failed << '\n';
  return rep.failed == 0 ? kOk : kValidation;
}

const char* kExitTable =
    "Exit codes: 0 ok, 1 runtime error, 2 usage error, 3 I/O error, 4 malformed instance file,\n"
    "            5 enumeration budget exceeded, 6 validation failure.\n"
    "Environment: QSENSE_WORKERS sets the worker count (default 1).";

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"qsense: sparse quadratic sensing experiments"};
  app.footer(kExitTable);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate an instance file");
  add_common(g, gen.common);
  add_instance_opts(g, gen.spec);
  g->add_option("--format", gen.format, "Instance family")
      ->check(CLI::IsMember({"quadratic", "binary", "pr"}));
  g->add_option("--kprime", gen.kprime, "Candidate sparsity for binary instances");
  g->add_option("--out", gen.out, "Output path");

  RunArgs runa;
  auto* r = app.add_subcommand("run", "Run one algorithm and emit one CSV row per seed");
  r->add_option("algorithm", runa.algorithm, "init | spf | tgd | pr-init")
      ->required()
      ->check(CLI::IsMember({"init", "spf", "tgd", "pr-init"}));
  add_common(r, runa.common);
  add_instance_opts(r, runa.spec);
  add_algo_opts(r, runa.algo);
  r->add_option("--instance", runa.instance, "Instance file instead of inline generation");
  r->add_option("--seeds", runa.seeds, "Number of consecutive seeds starting at --seed");
  r->add_option("--trace", runa.trace, "Write per-iteration error/risk CSV to this path");

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "Success rate over a parameter grid");
  add_common(s, sw.common);
  add_algo_opts(s, sw.algo);
  s->add_option("--algorithm", sw.algorithm, "init | spf | tgd | pr-init")
      ->check(CLI::IsMember({"init", "spf", "tgd", "pr-init"}));
  s->add_option("--n", sw.n, "Grid over n")->delimiter(',');
  s->add_option("--k", sw.k, "Grid over k")->delimiter(',');
  s->add_option("--m", sw.m, "Grid over m")->delimiter(',');
  s->add_option("--mu0", sw.mu0, "Grid over mu0 (default 1/sqrt(k))")->delimiter(',');
  s->add_option("--sigma", sw.sigma, "Grid over sigma")->delimiter(',');
  s->add_option("--noise", sw.noise, "Noise kind")->check(CLI::IsMember({"gaussian", "laplace", "none"}));
  s->add_option("--mode", sw.mode, "Ensemble storage")
      ->check(CLI::IsMember({"auto", "materialized", "streamed"}));
  s->add_option("--seeds", sw.seeds, "Seeds per grid point");
  s->add_option("--success", sw.success, "Relative sign-resolved error counted as success");

  OgpArgs og;
  auto* o = app.add_subcommand("ogp", "First-moment curve and brute-force overlap profiles");
  add_common(o, og.common);
  o->add_option("--n", og.n, "Ambient dimension (<= 64)");
  o->add_option("--k", og.k, "Planted sparsity");
  o->add_option("--kprime", og.kprime, "Candidate sparsity");
  o->add_option("--m", og.m, "Number of measurements")->check(CLI::PositiveNumber);
  o->add_option("--sigma", og.sigma, "Noise scale")->check(CLI::NonNegativeNumber);
  o->add_option("--noise", og.noise, "Noise kind")->check(CLI::IsMember({"gaussian", "laplace", "none"}));
  o->add_option("--alpha", og.alpha, "Union-bound slack (default log k)");
  o->add_option("--trials", og.trials, "Independent instances");
  o->add_option("--budget", og.budget, "Maximum candidates per profile");
  o->add_option("--curve-out", og.curve_out, "Curve CSV path (default stdout)");
  o->add_option("--profile-out", og.profile_out, "Profile CSV path (default stdout)");

  ValidateArgs va;
  auto* v = app.add_subcommand("validate", "Run invariant self-checks");
  add_common(v, va.common);
  v->add_option("--suite", va.suite, "chi2 | gradient | eigen | rip | combinatorics | all")
      ->check(CLI::IsMember({"chi2", "gradient", "eigen", "rip", "combinatorics", "all"}));
  v->add_option("--t", va.t, "Tail parameters for chi2")->delimiter(',');
  v->add_option("--dims", va.dims, "Weight-vector lengths for chi2")->delimiter(',');
  v->add_option("--trials", va.trials, "Monte Carlo trials for chi2");
  v->add_option("--cases", va.cases, "Random cases for gradient and eigen");
  v->add_option("--max-n", va.max_n, "Largest n for combinatorics");
  v->add_option("--slack", va.slack, "Multiplier on the chi2 tail bound")->check(CLI::NonNegativeNumber);

  CLI::App* active = nullptr;
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    active = app.get_subcommands().front();
    if (active == g) return cmd_gen(g, gen, out, err);
    if (active == r) return cmd_run(r, runa, out, err);
    if (active == s) return cmd_sweep(s, sw, out, err);
    if (active == o) return cmd_ogp(o, og, out, err);
    return cmd_validate(v, va, out, err);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    err << "error: " << e.what() << "\n\n" << (subs.empty() ? app.help() : subs.front()->help());
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << (active ? active->help() : app.help());
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kFormat;
  } catch (const BudgetExceeded& e) {
    err << "budget exceeded: " << e.what() << '\n';
    return kBudget;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace qsense::cli
