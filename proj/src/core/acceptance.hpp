// The acceptance suite: ten self-contained end-to-end checks of the whole
// stack, each printing exactly one pass/fail line. Tolerances are fixed here,
// not configurable; the suite is the contract the rest of the code is built
// against.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gapflow {

struct CriterionResult {
  int index = 0;
  std::string name;
  bool passed = false;
  double seconds = 0.0;
  std::string detail;  // measured numbers backing the verdict
};

struct AcceptanceReport {
  std::vector<CriterionResult> results;
  bool all_passed = true;
};

// Runs the listed criteria (1-10; empty = all). Each finished criterion
// writes one line "criterion N [name] PASS|FAIL (t s): detail" to live when
// given. A criterion that throws is reported as failed with the error text.
AcceptanceReport run_acceptance(const std::vector<int>& criteria = {}, int threads = 0,
                                std::ostream* live = nullptr);

}  // namespace gapflow
