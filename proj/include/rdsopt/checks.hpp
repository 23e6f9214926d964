#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rdsopt/manifold.hpp"

namespace rdsopt {

/// Outcome of one invariant on one subject. `margin` is the measured
/// distance from the failure boundary (negative when the check failed).
struct CheckResult {
  std::string suite;
  std::string name;
  std::string subject;
  bool passed = false;
  double margin = 0.0;
  std::string detail;
};

struct CheckOptions {
  std::uint64_t seed = 0;
  int geometry_cases = 100;
  int spanning_points = 50;
  int tau_trials = 200;
  /// Replaces the sphere retraction with one that skips normalization.
  bool inject_faulty_retraction = false;
};

/// Manifolds exercised by the suites, one or more per kind.
std::vector<ManifoldHandle> desk_manifolds(const CheckOptions& opt = {});

std::vector<CheckResult> check_geometry(const CheckOptions& opt = {});
std::vector<CheckResult> check_spanning(const CheckOptions& opt = {});
std::vector<CheckResult> check_solvers(const CheckOptions& opt = {});
std::vector<CheckResult> check_problems(const CheckOptions& opt = {});
std::vector<CheckResult> check_bench(const CheckOptions& opt = {});

/// Every suite above, in order.
std::vector<CheckResult> check_all(const CheckOptions& opt = {});

bool all_passed(const std::vector<CheckResult>& results);
void print_report(std::ostream& os, const std::vector<CheckResult>& results);

}  // namespace rdsopt
