#include <fstream>
#include <iostream>

#include "sl2flow/harness.hpp"

int main() {
  const sl2flow::RunConfig config;
  const auto results = sl2flow::run_acceptance(config, &std::cerr);
  bool pass = true;
  for (const auto& r : results) {
    std::cout << sl2flow::criterion_line(r) << '\n';
    pass = pass && r.pass;
  }
  std::ofstream("acceptance_report.json") << sl2flow::acceptance_report_json(results) << '\n';
  std::cout << (pass ? "all criteria pass" : "some criteria FAILED") << '\n';
  return pass ? 0 : 1;
}
