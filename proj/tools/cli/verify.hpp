#pragma once

// Invariant suites run by `cgeo verify`, on the built-in metrics.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cgeo::cli {

struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool at_least = false;  // value >= bound instead of value <= bound
  bool pass = false;
  std::string note;
};

struct SuiteResult {
  std::string name;
  std::vector<Check> checks;
  bool pass() const;
};

// circle, constraints, conformal-invariance, schouten, ray-angle, dexp,
// f-functions, cardioid, remainder, heart-exit, injectivity, no-spiral,
// size, determinism
const std::vector<std::string>& suite_names();

// Numeric failures inside a suite are recorded as failed checks.
SuiteResult run_suite(const std::string& name, std::uint64_t seed);

void write_json(std::ostream& os, const std::vector<SuiteResult>& results);

}  // namespace cgeo::cli
