#include "qsense/trace.hpp"

namespace qsense {

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::degenerate_iterate: return "degenerate_iterate";
    case StopReason::divergence: return "divergence";
  }
  return "unknown";
}

}  // namespace qsense
