// Runs the twelve acceptance experiments at their stated sizes and prints one
// line per criterion. Reports go to the directory given as the first argument
// (default: acceptance_reports next to the binary's working directory).
#include <filesystem>
#include <iostream>

#include "bbm/config.hpp"
#include "bbm/io.hpp"
#include "bbm/suites.hpp"

int main(int argc, char** argv) {
  using namespace bbm;
  const std::filesystem::path dir = argc > 1 ? argv[1] : "acceptance_reports";
  std::filesystem::create_directories(dir);
  RunConfig cfg;
  cfg.set("output.dir", dir.string());
  const OutputDir out(dir, cfg);

  SuiteRunner runner;
  int failed = 0;
  nlohmann::json summary = nlohmann::json::array();
  for (int id = 1; id <= kCriteria; ++id) {
    const auto o = runner.run(id);
    std::cout << outcome_line(o) << std::endl;
    write_report(out, o.report);
    summary.push_back({{"criterion", id}, {"title", criterion_title(id)}, {"pass", o.passed()},
                       {"seconds", o.seconds}, {"error", o.error}});
    if (!o.passed()) ++failed;
  }
  out.write_json("acceptance_summary.json", {{"criteria", summary}, {"failed", failed}});
  std::cout << (kCriteria - failed) << "/" << kCriteria << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
