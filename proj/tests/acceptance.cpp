// Runs every acceptance criterion and prints one PASS/FAIL line per
// criterion, followed by the per-check detail. Exit status is 0 iff all pass.

#include "deconv/acceptance.hpp"

#include <iostream>

int main()
{
  using namespace deconv::acceptance;
  std::vector<CriterionResult> results;
  for (const int id : suite_ids("all")) {
    results.push_back(run_criterion(id));
    print_result(std::cout, results.back());
    std::cout.flush();
  }
  std::cout << "\nsummary\n";
  bool all = true;
  for (const auto& r : results) {
    std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.id << ". " << r.name << '\n';
    all = all && r.pass;
  }
  return all ? 0 : 1;
}
