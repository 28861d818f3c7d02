#include <cstdio>

#include "criteria.hpp"

int main() {
  const int failures = cmv::acceptance::run_and_report(stdout);
  std::printf("%d hard criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
