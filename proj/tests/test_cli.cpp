#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qsense/cli.hpp"
#include "qsense/error.hpp"
#include "qsense/instance_io.hpp"

using namespace qsense;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string tmp(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qsense_cli_test";
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<std::string>> csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  FAIL("missing column " << name);
  return 0;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = cli::parse_config("# comment\n eta = 0.03 \n--seeds=4\n\nnoise=none # trailing\n");
  CHECK(c.at("eta") == "0.03");
  CHECK(c.at("seeds") == "4");
  CHECK(c.at("noise") == "none");
  CHECK_THROWS_AS(cli::parse_config("novalue\n"), InvalidArgument);
  CHECK_THROWS_AS(cli::parse_config("a=1\na=2\n"), InvalidArgument);
  CHECK_THROWS_AS(cli::load_config("/nonexistent/cfg"), IoError);
}

TEST_CASE("usage errors exit 2 with usage text") {
  CHECK(invoke({}).code == cli::kUsage);
  const Result r = invoke({"gen", "--n", "10", "--k", "2", "--seed", "1"});
  CHECK(r.code == cli::kUsage);
  CHECK(r.err.find("--m") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(invoke({"run", "bogus", "--n", "5"}).code == cli::kUsage);
  CHECK(invoke({"run", "init", "--n", "5", "--k", "9", "--m", "10", "--seed", "1"}).code == cli::kUsage);
  CHECK(invoke({"run", "tgd", "--n", "5", "--k", "1", "--m", "10", "--eta", "0.2", "--seed", "1"}).code ==
        cli::kUsage);
  CHECK(invoke({"--help"}).code == cli::kOk);
  CHECK(invoke({"gen", "--help"}).code == cli::kOk);
}

TEST_CASE("gen writes a loadable instance whose reload reproduces b") {
  const std::string path = tmp("gen.qsi");
  const Result r = invoke({"gen", "--n", "100", "--k", "5", "--m", "3000", "--mu0", "0.8", "--seed", "7",
                        "--out", path});
  REQUIRE(r.code == cli::kOk);
  CHECK(fs::file_size(path) < 1024);
  const auto inst = std::get<sensing::ProblemInstance>(io::load(path));
  const auto direct = sensing::generate_instance(100, 5, 3000, 0.8, 0.0, sensing::NoiseKind::gaussian,
                                                 std::nullopt, 7);
  CHECK(inst.b == direct.b);

  const std::string mat = tmp("gen_mat.qsi");
  REQUIRE(invoke({"gen", "--n", "8", "--k", "2", "--m", "10", "--mode", "materialized", "--seed", "3",
               "--out", mat})
              .code == cli::kOk);
  const std::string streamed = tmp("gen_str.qsi");
  REQUIRE(invoke({"gen", "--n", "8", "--k", "2", "--m", "10", "--mode", "streamed", "--seed", "3",
               "--out", streamed})
              .code == cli::kOk);
  CHECK(fs::file_size(streamed) < 1024);
  CHECK(fs::file_size(mat) > 8 * 8 * 10 * 8);
}

TEST_CASE("omitting the seed reports the drawn one") {
  const Result r = invoke({"gen", "--n", "6", "--k", "2", "--m", "5", "--out", tmp("entropy.qsi")});
  CHECK(r.code == cli::kOk);
  CHECK(r.err.find("seed=") != std::string::npos);
}

TEST_CASE("I/O and format errors have their own exit codes") {
  CHECK(invoke({"run", "init", "--instance", "/nonexistent/x.qsi"}).code == cli::kIo);
  CHECK(invoke({"gen", "--n", "6", "--k", "2", "--m", "5", "--seed", "1", "--out", "/nonexistent/d/x"})
            .code == cli::kIo);
  const std::string bad = tmp("bad.qsi");
  std::ofstream(bad) << "garbage\n";
  CHECK(invoke({"run", "init", "--instance", bad}).code == cli::kFormat);
  CHECK(invoke({"run", "init", "--config", "/nonexistent/cfg", "--n", "5"}).code == cli::kIo);
}

TEST_CASE("budget and validation failures") {
  const Result b = invoke({"ogp", "--n", "40", "--k", "4", "--kprime", "8", "--m", "10", "--seed", "1",
                        "--budget", "1000"});
  CHECK(b.code == cli::kBudget);
  const Result v = invoke({"validate", "--suite", "chi2", "--t", "1", "--dims", "1", "--trials", "2000",
                        "--slack", "0", "--seed", "1"});
  CHECK(v.code == cli::kValidation);
  CHECK(v.out.find("result=fail") != std::string::npos);
}

TEST_CASE("runtime failures exit 1") {
  const Result r = invoke({"gen", "--n", "100000", "--k", "1", "--m", "100000", "--mode", "materialized",
                        "--seed", "1", "--out", tmp("huge.qsi")});
  CHECK(r.code == cli::kRuntime);
}

TEST_CASE("algorithm failures surface as stop reasons") {
  const Result r = invoke({"run", "init", "--n", "20", "--k", "2", "--m", "50", "--c-thr", "1e6",
                        "--seed", "1"});
  REQUIRE(r.code == cli::kOk);
  const auto rows = csv(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][column(rows[0], "stop_reason")] == "degenerate_support");
  CHECK(rows[1][column(rows[0], "final_error")] == "nan");
}

TEST_CASE("run emits one row per seed and is reproducible") {
  const std::vector<std::string> args{"run", "spf", "--n", "30", "--k", "3", "--m", "500",
                                      "--mu0", "0.8", "--seeds", "3", "--seed", "11"};
  const Result a = invoke(args), b = invoke(args);
  REQUIRE(a.code == cli::kOk);
  CHECK(a.out == b.out);
  const auto rows = csv(a.out);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0][0] == "schema_version");
  for (std::size_t j = 1; j < 4; ++j) {
    CHECK(rows[j][column(rows[0], "seed")] == std::to_string(10 + j));
    CHECK(std::stod(rows[j][column(rows[0], "final_error")]) < 1e-6);
  }
  CHECK(a.out.find("wall_time") == std::string::npos);
  auto timed = args;
  timed.push_back("--timing");
  CHECK(invoke(timed).out.find("wall_time") != std::string::npos);
}

TEST_CASE("run --trace writes per-iteration rows") {
  const std::string trace = tmp("trace.csv");
  const Result r = invoke({"run", "tgd", "--n", "30", "--k", "3", "--m", "600", "--mu0", "0.8",
                        "--seeds", "2", "--seed", "4", "--trace", trace});
  REQUIRE(r.code == cli::kOk);
  const auto rows = csv(r.out);
  const auto tr = csv(slurp(trace));
  REQUIRE(tr.size() > 2);
  CHECK(tr[0] == std::vector<std::string>{"schema_version", "seed", "iteration", "error", "risk"});
  const std::size_t it = column(rows[0], "iterations");
  CHECK(tr.size() - 1 == std::stoul(rows[1][it]) + std::stoul(rows[2][it]) + 2);
}

TEST_CASE("spf and tgd on the same instance report the same metric") {
  const std::string path = tmp("shared.qsi");
  REQUIRE(invoke({"gen", "--n", "30", "--k", "3", "--m", "600", "--mu0", "0.8", "--seed", "9",
               "--out", path})
              .code == cli::kOk);
  const auto a = csv(invoke({"run", "spf", "--instance", path}).out);
  const auto b = csv(invoke({"run", "tgd", "--instance", path}).out);
  const double ea = std::stod(a[1][column(a[0], "final_error")]);
  const double eb = std::stod(b[1][column(b[0], "final_error")]);
  CHECK(ea < 1e-6);
  CHECK(eb < 1e-6);
  CHECK(a[1][column(a[0], "seed")] == "9");
  CHECK(invoke({"run", "pr-init", "--instance", path}).code == cli::kUsage);
  CHECK(invoke({"run", "spf", "--instance", path, "--seed", "3"}).code == cli::kUsage);
}

TEST_CASE("config file values apply unless a flag overrides them") {
  const std::string cfg = tmp("run.cfg");
  std::ofstream(cfg) << "n=20\nk=2\nm=200\nmu0=0.9\neta=0.03\nseed=5\n";
  const auto from_cfg = csv(invoke({"run", "tgd", "--config", cfg, "--t-max", "3"}).out);
  REQUIRE(from_cfg.size() == 2);
  CHECK(from_cfg[1][column(from_cfg[0], "eta")] == "0.03");
  CHECK(from_cfg[1][column(from_cfg[0], "n")] == "20");
  const auto flagged = csv(invoke({"run", "tgd", "--config", cfg, "--t-max", "3", "--eta", "0.02"}).out);
  CHECK(flagged[1][column(flagged[0], "eta")] == "0.02");
  const auto defaults = csv(invoke({"run", "tgd", "--n", "20", "--k", "2", "--m", "200", "--seed", "5",
                                 "--t-max", "3"})
                                .out);
  CHECK(defaults[1][column(defaults[0], "eta")] == "0.04");

  const std::string badcfg = tmp("bad.cfg");
  std::ofstream(badcfg) << "frobnicate=1\n";
  CHECK(invoke({"run", "tgd", "--config", badcfg}).code == cli::kUsage);
}

TEST_CASE("sweep rows match the grid and aggregate run rows") {
  const Result s = invoke({"sweep", "--algorithm", "init", "--n", "30", "--k", "2,3", "--m",
                        "200,400,800", "--mu0", "0.8", "--seeds", "3", "--seed", "2",
                        "--success", "0.5"});
  REQUIRE(s.code == cli::kOk);
  const auto rows = csv(s.out);
  CHECK(rows.size() == 1 + 2 * 3);
  CHECK(rows[0] == std::vector<std::string>{"schema_version", "n", "k", "m", "mu0", "sigma",
                                            "algorithm", "success_rate", "median_error", "seeds"});

  const auto single = csv(invoke({"sweep", "--algorithm", "init", "--n", "30", "--k", "3", "--m", "400",
                               "--mu0", "0.8", "--seeds", "3", "--seed", "2", "--success", "0.5"})
                              .out);
  const auto runs = csv(invoke({"run", "init", "--n", "30", "--k", "3", "--m", "400", "--mu0", "0.8",
                             "--seeds", "3", "--seed", "2"})
                            .out);
  std::vector<double> errs;
  int ok = 0;
  for (std::size_t j = 1; j < runs.size(); ++j) {
    errs.push_back(std::stod(runs[j][column(runs[0], "final_error")]));
    if (errs.back() <= 0.5) ++ok;
  }
  std::sort(errs.begin(), errs.end());
  CHECK(std::stod(single[1][column(single[0], "median_error")]) == doctest::Approx(errs[1]).epsilon(1e-11));
  CHECK(std::stod(single[1][column(single[0], "success_rate")]) == doctest::Approx(ok / 3.0));
}

TEST_CASE("sweep success rate grows with m") {
  const Result s = invoke({"sweep", "--algorithm", "spf", "--n", "40", "--k", "3", "--m",
                        "60,200,600,1500", "--mu0", "0.8", "--seeds", "6", "--seed", "21"});
  REQUIRE(s.code == cli::kOk);
  const auto rows = csv(s.out);
  const std::size_t c = column(rows[0], "success_rate");
  for (std::size_t j = 2; j < rows.size(); ++j) CHECK(std::stod(rows[j][c]) >= std::stod(rows[j - 1][c]));
  CHECK(std::stod(rows.back()[c]) == 1.0);
}

TEST_CASE("ogp emits both tables and a summary") {
  const std::string curve = tmp("curve.csv"), prof = tmp("profile.csv");
  const Result r = invoke({"ogp", "--n", "16", "--k", "4", "--kprime", "4", "--m", "12", "--trials", "10",
                        "--seed", "1", "--curve-out", curve, "--profile-out", prof});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.rfind("summary trials=10", 0) == 0);
  CHECK(r.out.find("pass_fraction=1") != std::string::npos);
  CHECK(csv(slurp(curve)).size() == 6);
  CHECK(csv(slurp(prof)).size() == 1 + 10 * 5);
}

TEST_CASE("validate suites pass") {
  const Result r = invoke({"validate", "--suite", "all", "--trials", "20000", "--seed", "3", "--max-n", "10"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("result=fail") == std::string::npos);
  CHECK(r.out.find("summary passed=") != std::string::npos);
}

TEST_CASE("worker count does not change output bytes") {
  const std::vector<std::string> args{"sweep", "--algorithm", "pr-init", "--n", "30", "--k", "3",
                                      "--m", "300,600", "--mu0", "0.8", "--seeds", "4", "--seed",
                                      "8", "--success", "0.3"};
  setenv("QSENSE_WORKERS", "1", 1);
  const std::string one = invoke(args).out;
  setenv("QSENSE_WORKERS", "4", 1);
  const std::string four = invoke(args).out;
  unsetenv("QSENSE_WORKERS");
  CHECK(one == four);
}
