// Acceptance suite runner: one pass/fail line per criterion, exit 0 only if
// every criterion holds within its time budget.

#include <cstdlib>
#include <cstring>
#include <iostream>

#include "lipshadow/acceptance.hpp"

int main(int argc, char** argv) {
  lipshadow::AcceptanceOptions options;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc)
      options.seed = std::strtoull(argv[++i], nullptr, 10);
    else if (std::strcmp(argv[i], "--jobs") == 0 && i + 1 < argc)
      options.jobs = std::atoi(argv[++i]);
    else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc)
      options.only_item = std::atoi(argv[++i]);
    else if (std::strcmp(argv[i], "--corrupt") == 0 && i + 1 < argc)
      options.corrupt = argv[++i];
  }
  const char* jobs_env = std::getenv("LIPSHADOW_JOBS");
  if (jobs_env) options.jobs = std::atoi(jobs_env);

  lipshadow::AcceptanceReport report = lipshadow::run_acceptance(options);
  lipshadow::print_acceptance(std::cout, report, true);
  return report.all_pass ? 0 : 1;
}
