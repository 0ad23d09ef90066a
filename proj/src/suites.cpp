#include "bbm/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>

#include "bbm/errors.hpp"

namespace bbm {

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> n{"identities", "pde", "sampler", "limits", "properties", "all"};
  return n;
}

std::vector<int> suite_criteria(const std::string& suite) {
  static const std::map<std::string, std::vector<int>> m{
      {"identities", {1, 5}},   {"pde", {2, 3, 4}},  {"sampler", {6, 7, 11}},
      {"limits", {8, 9, 10}},   {"properties", {12}},
      {"all", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}},
  };
  const auto it = m.find(suite);
  if (it == m.end()) throw ConfigError("unknown suite '" + suite + "'");
  return it->second;
}

std::string criterion_title(int id) {
  static const std::vector<std::string> t{
      "martingale identities",        "pde vs simulation",     "centering",
      "tail constant",                "spinal identity",       "gamma sampler",
      "thinning equivalence",         "record poissonization", "genealogy dichotomy",
      "extremal measure comparison",  "laplace ratio",         "property suite",
  };
  if (id < 1 || id > kCriteria) throw ConfigError("no criterion " + std::to_string(id));
  return t[static_cast<std::size_t>(id - 1)];
}

std::string outcome_line(const CriterionOutcome& o) {
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.1f", o.seconds);
  std::string line = std::string(o.passed() ? "[PASS] " : "[FAIL] ") + std::to_string(o.id) + " " +
                     criterion_title(o.id) + " (" + secs + " s)";
  if (!o.error.empty()) return line + " error: " + o.error;
  std::string failed, diagnostics;
  for (const auto& v : o.report.verdicts) {
    if (v.pass) continue;
    auto& list = v.gating ? failed : diagnostics;
    list += (list.empty() ? "" : ", ") + v.name;
  }
  if (!failed.empty()) line += " failed: " + failed;
  if (!diagnostics.empty()) line += " (diagnostics off: " + diagnostics + ")";
  return line;
}

SuiteRunner::SuiteRunner(SuiteOptions opts) : opts_(opts) {
  if (!(opts_.scale > 0.0)) throw ConfigError("suite scale must be positive");
  if (opts_.master_seed == 0) throw ConfigError("master seed must be positive");
}

std::size_t SuiteRunner::scaled(std::size_t n) const {
  return std::max<std::size_t>(10, static_cast<std::size_t>(std::llround(opts_.scale * static_cast<double>(n))));
}

std::uint64_t SuiteRunner::seed(std::uint64_t base) const { return base + 100 * (opts_.master_seed - 1); }

const FkppTable& SuiteRunner::table_short() {
  if (!short_) {
    FkppSpec s;
    s.horizon = 3.0;
    s.half_width = 40.0;
    short_ = std::make_unique<FkppTable>(solve_fkpp(s));
  }
  return *short_;
}

const FkppTable& SuiteRunner::table_standard() {
  if (!standard_) {
    FkppSpec s;
    s.horizon = 30.0;
    standard_ = std::make_unique<FkppTable>(solve_fkpp(s));
  }
  return *standard_;
}

const FkppTable& SuiteRunner::table_converged() {
  if (!converged_) {
    FkppSpec s;
    s.horizon = 400.0;
    s.half_width = 150.0;
    s.store_every = 1.0;
    converged_ = std::make_unique<FkppTable>(solve_fkpp(s));
  }
  return *converged_;
}

const FkppTable& SuiteRunner::table_spinal() {
  if (!spinal_) {
    FkppSpec s;
    s.horizon = 2.0;
    s.dt = 1e-3;
    s.dense_until = 2.0;
    s.half_width = 30.0;
    spinal_ = std::make_unique<FkppTable>(solve_fkpp(s));
  }
  return *spinal_;
}

double SuiteRunner::tail_c() {
  if (!tail_c_) {
    const auto& t = table_converged();
    tail_c_ = tail_constant(wave_profile(t, t.horizon())).affine_c;
  }
  return *tail_c_;
}

CriterionOutcome SuiteRunner::run(int id) {
  CriterionOutcome out;
  out.id = id;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    out.report = dispatch(id);
  } catch (const Error& e) {
    out.report.name = criterion_title(id);
    out.error = e.what();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.report.config["criterion"] = id;
  out.report.config["scale"] = opts_.scale;
  return out;
}

ExperimentReport SuiteRunner::dispatch(int id) {
  switch (id) {
    case 1: {
      ManyToOneConfig c;
      c.replicas = scaled(c.replicas);
      c.seed = seed(c.seed);
      return many_to_one_check(c);
    }
    case 2: {
      PdeSimConfig c;
      c.replicas = scaled(c.replicas);
      c.seed = seed(c.seed);
      return pde_simulation_check(c, table_short());
    }
    case 3: return centering_check(FrontConfig{}, table_converged());
    case 4: return tail_check(FrontConfig{}, table_converged());
    case 5: {
      SpinalConfig c;
      c.lhs_runs = scaled(c.lhs_runs);
      c.rhs_paths = scaled(c.rhs_paths);
      c.seed = seed(c.seed);
      return spinal_identity_check(c, table_spinal());
    }
    case 6: {
      FirstPassageConfig c;
      c.samples = scaled(c.samples);
      c.seed = seed(c.seed);
      return first_passage_check(c);
    }
    case 7: {
      ThinningConfig c;
      c.candidates = scaled(c.candidates);
      c.seed = seed(c.seed);
      return thinning_check(c, table_standard());
    }
    case 8: {
      RecordConfig c;
      c.replicas = scaled(c.replicas);
      c.c = tail_c();
      c.seed = seed(c.seed);
      const auto& t = table_converged();
      return record_poissonization(c, wave_profile(t, t.horizon()));
    }
    case 9: {
      GapConfig c;
      c.replicas = scaled(c.replicas);
      c.m_t = table_standard().median_at(c.t);
      c.seed = seed(c.seed);
      return genealogy_gap(c);
    }
    case 10: {
      ExtremalConfig c;
      c.replicas = scaled(c.replicas);
      c.limit_draws = scaled(c.limit_draws);
      c.c = tail_c();
      c.m_t = table_standard().median_at(c.t);
      c.m_rerun = table_standard().median_at(c.rerun_t);
      c.seed = seed(c.seed);
      return extremal_comparison(c, table_standard());
    }
    case 11: {
      LaplaceConfig c;
      c.direct_draws = scaled(c.direct_draws);
      c.ratio_draws = scaled(c.ratio_draws);
      c.seed = seed(c.seed);
      return laplace_ratio_check(c, table_standard());
    }
    case 12: return property_suite(seed(12));
  }
  throw ConfigError("no criterion " + std::to_string(id));
}

}  // namespace bbm
