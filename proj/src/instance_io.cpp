#include "qsense/instance_io.hpp"

#include <bit>
#include <cerrno>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "qsense/error.hpp"

namespace qsense::io {

using sensing::BinaryInstance;
using sensing::EnsembleMode;
using sensing::ProblemInstance;

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xFF) << (8 * (7 - i));
  return r;
}

void write_doubles(std::ostream& out, std::span<const double> v) {
  std::vector<std::uint64_t> words(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) words[i] = to_le(std::bit_cast<std::uint64_t>(v[i]));
  out.write(reinterpret_cast<const char*>(words.data()),
            static_cast<std::streamsize>(words.size() * sizeof(std::uint64_t)));
}

std::vector<double> read_doubles(std::istream& in, std::size_t count, const char* what) {
  std::vector<std::uint64_t> words(count);
  in.read(reinterpret_cast<char*>(words.data()),
          static_cast<std::streamsize>(count * sizeof(std::uint64_t)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(std::uint64_t)) {
    throw FormatError(std::string("truncated payload while reading ") + what);
  }
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) v[i] = std::bit_cast<double>(to_le(words[i]));
  return v;
}

const char* format_name(Format f) {
  switch (f) {
    case Format::quadratic: return "quadratic";
    case Format::binary: return "binary";
    case Format::pr: return "pr";
  }
  return "quadratic";
}

using Fields = std::vector<std::pair<std::string, std::string>>;

Fields common_fields(Format f, std::size_t n, std::size_t k, std::size_t m, double mu0,
                     double mu0_target, double sigma, sensing::NoiseKind noise, EnsembleMode mode,
                     std::uint64_t seed, std::span<const double> b) {
  return {{"format", format_name(f)},
          {"n", std::to_string(n)},
          {"k", std::to_string(k)},
          {"m", std::to_string(m)},
          {"mu0", fmt_double(mu0)},
          {"mu0_target", fmt_double(mu0_target)},
          {"sigma", fmt_double(sigma)},
          {"noise", sensing::to_string(noise)},
          {"mode", sensing::to_string(mode)},
          {"seed", std::to_string(seed)},
          {"b_fnv1a", hex64(checksum(b))}};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void write_header(std::ostream& out, const Fields& fields) {
  out << kMagic << '\n';
  for (const auto& [k, v] : fields) out << k << '=' << v << '\n';
  out << "END\n";
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

struct Parsed {
  Header header;
  std::ifstream in;
};

Parsed parse(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty file '" + path + "'");
  if (line != kMagic) throw FormatError("'" + path + "' is not an instance file");
  std::map<std::string, std::string> fields;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "END") {
      ended = true;
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) throw FormatError("malformed header line '" + line + "'");
    fields[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (!ended) throw FormatError("header of '" + path + "' is not terminated by END");
  const auto it = fields.find("format");
  if (it == fields.end()) throw FormatError("header lacks 'format'");
  Format f;
  if (it->second == "quadratic") {
    f = Format::quadratic;
  } else if (it->second == "binary") {
    f = Format::binary;
  } else if (it->second == "pr") {
    f = Format::pr;
  } else {
    throw FormatError("unknown format '" + it->second + "'");
  }
  return {Header{f, std::move(fields)}, std::move(in)};
}

const std::string& field(const Header& h, const std::string& key) {
  const auto it = h.fields.find(key);
  if (it == h.fields.end()) throw FormatError("header lacks '" + key + "'");
  return it->second;
}

std::uint64_t get_u64(const Header& h, const std::string& key) {
  const std::string& s = field(h, key);
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno != 0 || s[0] == '-') {
    throw FormatError("bad integer for '" + key + "': " + s);
  }
  return v;
}

double get_double(const Header& h, const std::string& key) {
  const std::string& s = field(h, key);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw FormatError("bad number for '" + key + "': " + s);
  return v;
}

template <class F>
auto wrap_enum(F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

void verify(const Header& h, std::span<const double> b) {
  if (hex64(checksum(b)) != field(h, "b_fnv1a")) {
    throw FormatError("measurement checksum mismatch; file and generator disagree");
  }
}

}  // namespace

std::uint64_t checksum(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    const std::uint64_t w = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (w >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void save(const std::string& path, const ProblemInstance& inst) {
  const auto mode = inst.ensemble.mode();
  Fields f = common_fields(Format::quadratic, inst.n, inst.k, inst.m, inst.mu0, inst.mu0_target,
                           inst.sigma, inst.noise_kind, mode, inst.seed, inst.b);
  f.emplace_back("payload", mode == EnsembleMode::materialized ? "A,x0,noise,b" : "none");
  auto out = open_out(path);
  write_header(out, f);
  if (mode == EnsembleMode::materialized) {
    write_doubles(out, inst.ensemble.data());
    write_doubles(out, inst.x0.values());
    write_doubles(out, inst.noise);
    write_doubles(out, inst.b);
  }
  finish(out, path);
}

void save(const std::string& path, const BinaryInstance& inst) {
  const auto& p = inst.problem;
  const auto mode = p.ensemble.mode();
  Fields f = common_fields(Format::binary, p.n, p.k, p.m, p.mu0, p.mu0_target, p.sigma,
                           p.noise_kind, mode, p.seed, p.b);
  f.emplace_back("kprime", std::to_string(inst.kprime));
  f.emplace_back("payload", mode == EnsembleMode::materialized ? "A,x0,noise,b" : "none");
  auto out = open_out(path);
  write_header(out, f);
  if (mode == EnsembleMode::materialized) {
    write_doubles(out, p.ensemble.data());
    write_doubles(out, p.x0.values());
    write_doubles(out, p.noise);
    write_doubles(out, p.b);
  }
  finish(out, path);
}

void save(const std::string& path, const pr::PRInstance& inst) {
  Fields f = common_fields(Format::pr, inst.n, inst.k, inst.m, inst.mu0, inst.mu0_target,
                           inst.sigma, inst.noise_kind, inst.mode, inst.seed, inst.b);
  f.emplace_back("payload", inst.mode == EnsembleMode::materialized ? "a,x0,noise,b" : "none");
  auto out = open_out(path);
  write_header(out, f);
  if (inst.mode == EnsembleMode::materialized) {
    write_doubles(out, inst.a);
    write_doubles(out, inst.x0.values());
    write_doubles(out, inst.noise);
    write_doubles(out, inst.b);
  }
  finish(out, path);
}

Header read_header(const std::string& path) { return parse(path).header; }

AnyInstance load(const std::string& path) {
  Parsed p = parse(path);
  const Header& h = p.header;
  const std::size_t n = get_u64(h, "n"), k = get_u64(h, "k"), m = get_u64(h, "m");
  const double mu0_target = get_double(h, "mu0_target");
  const double sigma = get_double(h, "sigma");
  const std::uint64_t seed = get_u64(h, "seed");
  const auto noise = wrap_enum([&] { return sensing::parse_noise(field(h, "noise")); });
  const auto mode = wrap_enum([&] { return sensing::parse_mode(field(h, "mode")); });
  if (n == 0 || m == 0 || k == 0 || k > n) throw FormatError("inconsistent dimensions in header");
  const bool stored = mode == EnsembleMode::materialized;
  const std::string payload = field(h, "payload");
  if (stored == (payload == "none")) throw FormatError("payload does not match mode");

  try {
    switch (h.format) {
      case Format::quadratic: {
        if (!stored) {
          auto inst = sensing::generate_instance(n, k, m, mu0_target, sigma, noise, mode, seed);
          verify(h, inst.b);
          return inst;
        }
        auto a = read_doubles(p.in, n * n * m, "A");
        auto x0 = read_doubles(p.in, n, "x0");
        auto eps = read_doubles(p.in, m, "noise");
        auto b = read_doubles(p.in, m, "b");
        verify(h, b);
        ProblemInstance inst{n,     k,     m,     DenseVector(std::move(x0)),
                             get_double(h, "mu0"), sigma, noise, std::move(eps),
                             std::move(b), sensing::SensingEnsemble::from_matrices(n, m, std::move(a), seed),
                             seed,  mu0_target};
        return inst;
      }
      case Format::binary: {
        const std::size_t kprime = get_u64(h, "kprime");
        if (!stored) {
          auto inst = sensing::generate_binary_instance(n, k, kprime, m, sigma, noise, mode, seed);
          verify(h, inst.problem.b);
          return inst;
        }
        auto a = read_doubles(p.in, n * n * m, "A");
        auto x0 = read_doubles(p.in, n, "x0");
        auto eps = read_doubles(p.in, m, "noise");
        auto b = read_doubles(p.in, m, "b");
        verify(h, b);
        ProblemInstance inst{n,     k,     m,     DenseVector(std::move(x0)),
                             get_double(h, "mu0"), sigma, noise, std::move(eps),
                             std::move(b), sensing::SensingEnsemble::from_matrices(n, m, std::move(a), seed),
                             seed,  mu0_target};
        return BinaryInstance{std::move(inst), kprime};
      }
      case Format::pr: {
        if (!stored) {
          auto inst = pr::generate_pr_instance(n, k, m, mu0_target, sigma, noise, mode, seed);
          verify(h, inst.b);
          return inst;
        }
        auto a = read_doubles(p.in, n * m, "a");
        auto x0 = read_doubles(p.in, n, "x0");
        auto eps = read_doubles(p.in, m, "noise");
        auto b = read_doubles(p.in, m, "b");
        verify(h, b);
        pr::PRInstance inst{n,     k,     m,     DenseVector(std::move(x0)), get_double(h, "mu0"),
                            sigma, noise, std::move(eps), std::move(b), std::move(a), mode, seed,
                            mu0_target};
        return inst;
      }
    }
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("header describes an invalid instance: ") + e.what());
  }
  throw FormatError("unreachable format");
}

}  // namespace qsense::io
