#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "bbm/errors.hpp"
#include "bbm/fkpp.hpp"
#include "bbm/harness.hpp"

namespace bbm {
namespace {

TEST(Report, VerdictsAndJson) {
  ExperimentReport r;
  r.name = "demo";
  EXPECT_TRUE(r.passed());
  r.estimate("m", {1.0, 0.1, 10});
  r.exact("oracle", 1.0);
  r.z_check("z_ok", 1.0);
  EXPECT_TRUE(r.passed());
  r.z_check("z_inf", INFINITY);
  EXPECT_FALSE(r.passed());
  const auto j = r.to_json();
  EXPECT_EQ(j["experiment"], "demo");
  EXPECT_EQ(j["verdicts"].size(), 2u);
  EXPECT_EQ(j["verdicts"][0]["rule"], "|z| < 3.0");
  EXPECT_EQ(j["stats"]["m"]["se"], 0.1);
  EXPECT_EQ(j["stats"]["oracle"]["exact"], true);
  EXPECT_EQ(j["pass"], false);
}

TEST(Report, DiagnosticsDoNotGate) {
  ExperimentReport r;
  r.check("main", true, "always");
  r.z_check("proxy", 5.0, 3.0, false);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.to_json()["verdicts"][1]["gating"], false);
  EXPECT_EQ(r.to_json()["verdicts"][1]["pass"], false);
}

TEST(ParallelFor, EachIndexOnceAndErrorsPropagate) {
  std::vector<std::atomic<int>> seen(1000);
  parallel_for(seen.size(), [&](std::size_t i) { ++seen[i]; }, 4);
  for (const auto& s : seen) EXPECT_EQ(s.load(), 1);
  EXPECT_THROW(parallel_for(100, [](std::size_t i) { if (i == 37) throw NumericError("x"); }, 3),
               NumericError);
  parallel_for(0, [](std::size_t) { FAIL(); });
}

TEST(ManyToOne, TimeZeroIsExact) {
  ManyToOneConfig c;
  c.t = 0.0;
  c.replicas = 10;
  const auto r = many_to_one_check(c);
  EXPECT_EQ(r.stats["M_t"]["mean"], 1.0);
  EXPECT_EQ(r.stats["M_t"]["se"], 0.0);
  EXPECT_EQ(r.stats["Z_t"]["mean"], 0.0);
  EXPECT_TRUE(r.passed());
  c.replicas = 1;
  EXPECT_THROW(many_to_one_check(c), ConfigError);
}

TEST(ManyToOne, SmallRunPasses) {
  ManyToOneConfig c;
  c.t = 1.0;
  c.replicas = 2000;
  EXPECT_TRUE(many_to_one_check(c).passed());
}

TEST(FirstPassage, SmallRunPasses) {
  FirstPassageConfig c;
  c.samples = 500;
  const auto r = first_passage_check(c);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.raw.at("t_b").size(), 500u);
}

TEST(GenealogyGap, MidpointWindowIsEmpty) {
  GapConfig c;
  c.t = 4.0;
  c.m_t = 1.5 * std::log(4.0) + 2.0;
  c.zetas = {0.5, 2.0};  // zeta = t/2 leaves the single instant t/2
  c.replicas = 100;
  c.prune.enabled = false;
  c.dip_reps = 0;
  const auto r = genealogy_gap(c);
  EXPECT_EQ(r.stats["p_zeta_2.000000"]["mean"], 0.0);
  EXPECT_TRUE(r.passed());
  c.zetas = {3.0};
  EXPECT_THROW(genealogy_gap(c), ConfigError);
}

FkppTable table30() {
  FkppSpec s;
  s.horizon = 30.0;
  return solve_fkpp(s);
}

TEST(LaplaceRatio, ZeroAlphaIsOneOnBothSides) {
  LaplaceConfig c;
  c.alpha = {0.0};
  c.direct_draws = 300;
  c.ratio_draws = 300;
  const auto r = laplace_ratio_check(c, table30());
  EXPECT_DOUBLE_EQ(r.stats["direct"]["mean"].get<double>(), 1.0);
  EXPECT_EQ(r.stats["ratio"]["mean"], 1.0);
  EXPECT_EQ(r.stats["atom_at_0_factor"]["value"], 1.0);
  EXPECT_TRUE(r.passed());
  c.sets.push_back({0.0, 1.0});
  EXPECT_THROW(laplace_ratio_check(c, table30()), ConfigError);
}

TEST(Spinal, ConstantFunctionalBalances) {
  FkppSpec s;
  s.horizon = 1.0;
  s.dt = 1e-3;
  s.dense_until = 1.0;
  s.half_width = 30.0;
  const auto table = solve_fkpp(s);
  SpinalConfig c;
  c.t = 1.0;
  c.barrier.reset();
  c.lhs_runs = 3000;
  c.rhs_paths = 3000;
  const auto r = spinal_identity_check(c, table);
  EXPECT_TRUE(r.passed());
  c.t = 2.0;
  EXPECT_THROW(spinal_identity_check(c, table), ConfigError);
}

TEST(FrontChecks, ShortTableIsRejected) {
  FkppSpec s;
  s.horizon = 30.0;
  s.store_every = 1.0;
  const auto t = solve_fkpp(s);
  EXPECT_THROW(centering_check(FrontConfig{}, t), ConfigError);
  // The tail check runs on any table and reports the fit.
  const auto r = tail_check(FrontConfig{}, t);
  EXPECT_EQ(r.verdicts.size(), 1u);
}

TEST(PropertySuite, AllInvariantsHold) {
  const auto r = property_suite(12);
  EXPECT_GE(r.verdicts.size(), 10u);
  for (const auto& v : r.verdicts) EXPECT_TRUE(v.pass) << v.name << ": " << v.rule;
}

}  // namespace
}  // namespace bbm
