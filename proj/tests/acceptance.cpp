// Runs criteria 1-10, then re-runs them for the determinism check (11).
// Prints one line per criterion; --verbose adds every check.
#include <cstring>
#include <iostream>

#include "netlab/experiments.hpp"

using namespace netlab;

int main(int argc, char** argv) {
  bool verbose = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--verbose") == 0) verbose = true;

  std::vector<CriterionReport> reports;
  int failed = 0;
  for (int id = 1; id <= 10; ++id) {
    reports.push_back(run_criterion(id));
    const auto& r = reports.back();
    std::cout << summary_line(r) << "\n";
    if (verbose || !r.pass()) std::cout << details(r);
    std::cout.flush();
    if (!r.pass()) ++failed;
  }
  CriterionReport det = check_determinism(reports);
  std::cout << summary_line(det) << "\n";
  if (verbose || !det.pass()) std::cout << details(det);
  if (!det.pass()) ++failed;

  std::cout << (11 - failed) << "/11 criteria pass\n";
  return failed == 0 ? 0 : 1;
}
