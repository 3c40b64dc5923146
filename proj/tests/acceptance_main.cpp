// Acceptance gate runner. One process per criterion under ctest
// (--criterion N); with no arguments it runs the whole suite.
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <vector>

#include "core/acceptance.hpp"

int main(int argc, char** argv) {
  std::vector<int> criteria;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      const int c = std::atoi(argv[++i]);
      if (c < 1 || c > 10) {
        std::fprintf(stderr, "criterion index must be in 1..10, got '%s'\n", argv[i]);
        return 2;
      }
      criteria.push_back(c);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]...\n", argv[0]);
      return 2;
    }
  }
  const gapflow::AcceptanceReport rep =
      gapflow::run_acceptance(criteria, /*threads=*/0, &std::cout);
  return rep.all_passed ? 0 : 1;
}
