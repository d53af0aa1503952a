#pragma once

// Single-file instance storage. Layout is documented in docs/formats.md.

#include <cstdint>
#include <map>
#include <string>
#include <variant>

#include "qsense/phase_retrieval.hpp"
#include "qsense/sensing.hpp"

namespace qsense::io {

inline constexpr const char* kMagic = "QSENSE-INSTANCE v1";

enum class Format { quadratic, binary, pr };

using AnyInstance = std::variant<sensing::ProblemInstance, sensing::BinaryInstance, pr::PRInstance>;

struct Header {
  Format format;
  std::map<std::string, std::string> fields;
};

void save(const std::string& path, const sensing::ProblemInstance& inst);
void save(const std::string& path, const sensing::BinaryInstance& inst);
void save(const std::string& path, const pr::PRInstance& inst);

/// Throws IoError when the file cannot be read and FormatError when it is malformed
/// or a regenerated instance does not match the stored checksum.
AnyInstance load(const std::string& path);
Header read_header(const std::string& path);

/// FNV-1a over the little-endian bytes of the values.
std::uint64_t checksum(std::span<const double> values);

}  // namespace qsense::io
