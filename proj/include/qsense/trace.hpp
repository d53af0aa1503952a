#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qsense/linalg.hpp"

namespace qsense {

enum class StopReason { converged, max_iterations, degenerate_iterate, divergence };

std::string to_string(StopReason r);

/// Per-iteration history of an iterative solver. Entry 0 is the starting point.
struct RecoveryTrace {
  std::vector<DenseVector> iterates;
  std::vector<double> errors;  // sign-resolved distance to x0; NaN when not tracked
  std::vector<double> risks;
  bool converged = false;
  StopReason stop_reason = StopReason::max_iterations;

  std::size_t size() const noexcept { return iterates.size(); }
  const DenseVector& final_iterate() const { return iterates.back(); }
  double final_error() const { return errors.back(); }
};

/// An iteration produced the zero vector; carries the trace up to that point.
class DegenerateIterate : public std::runtime_error {
 public:
  DegenerateIterate(const std::string& what, RecoveryTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const RecoveryTrace& trace() const noexcept { return trace_; }

 private:
  RecoveryTrace trace_;
};

/// The risk blew up past the guard; carries the trace up to that point.
class Divergence : public std::runtime_error {
 public:
  Divergence(const std::string& what, RecoveryTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const RecoveryTrace& trace() const noexcept { return trace_; }

 private:
  RecoveryTrace trace_;
};

}  // namespace qsense
