#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bbm/decoration.hpp"
#include "bbm/errors.hpp"
#include "bbm/fkpp.hpp"
#include "bbm/rng.hpp"
#include "bbm/stats.hpp"

namespace bbm {
namespace {

const FkppTable& table30() {
  static const FkppTable t = [] {
    FkppSpec s;
    s.horizon = 30.0;
    s.store_every = 0.05;
    return solve_fkpp(s);
  }();
  return t;
}

TEST(Gamma, StartsAtZeroAndPeaksAtB) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const double b = 0.5 + 0.02 * static_cast<double>(seed);
    const auto g = sample_gamma(b, 1e-3, 30.0, seed);
    EXPECT_EQ(g.values.front(), 0.0);
    if (!g.completed) continue;
    EXPECT_EQ(g.value_at(g.t_b), b);
    EXPECT_LE(*std::max_element(g.values.begin(), g.values.end()), b);
    EXPECT_GT(g.t_b, 0.0);
  }
  EXPECT_THROW(sample_gamma(-1.0, 1e-3, 1.0, 1), ConfigError);
}

TEST(Gamma, BesselPhaseSecondMoment) {
  // After T_b, b - Gamma is a 3-d Bessel process from 0: E[(b - Gamma)^2] = 3u.
  const double u = 1.0;
  std::vector<double> sq;
  for (std::uint64_t seed = 0; sq.size() < 2000; ++seed) {
    const auto g = sample_gamma(0.5, 1e-3, 12.0, 1000 + seed);
    if (!g.completed || g.t_b + u > g.horizon) continue;
    const double r = g.b - g.value_at(g.t_b + u);
    sq.push_back(r * r);
  }
  const auto e = stats::mean_se(sq);
  EXPECT_LT(std::abs(e.mean - 3.0 * u), 3.0 * e.se);
}

TEST(PathIntegral, ZeroIntegrandAndMonotoneHorizon) {
  const auto g = sample_gamma(1.0, 1e-2, 30.0, 5);
  const auto zero = [](double, double) { return 0.0; };
  EXPECT_EQ(path_integral(g, zero, std::sqrt(2.0), 30.0), 0.0);
  EXPECT_EQ(std::exp(-2.0 * path_integral(g, zero, std::sqrt(2.0), 30.0)), 1.0);
  const auto& t = table30();
  const auto f = [&](double v, double x) { return t.g(v, x); };
  double prev = 0.0;
  for (double h : {1.0, 5.0, 10.0, 20.0, 30.0}) {
    const double i = path_integral(g, f, std::sqrt(2.0), h, 0.5);
    EXPECT_GE(i, prev);
    prev = i;
  }
  const auto w = path_weight(g, t);
  EXPECT_NEAR(w.weight, std::exp(-2.0 * prev), 1e-12);
  EXPECT_GT(w.weight, 0.0);
  EXPECT_LE(w.weight, 1.0);
}

TEST(PathIntegral, RefinementIsStable) {
  GammaPath fine;
  for (std::uint64_t seed = 8; !fine.completed; ++seed) fine = sample_gamma(1.5, 1e-3, 30.0, seed);
  GammaPath coarse = fine;
  coarse.dt = 2e-3;
  coarse.values.clear();
  for (std::size_t i = 0; i < fine.values.size(); i += 2) coarse.values.push_back(fine.values[i]);
  const auto& t = table30();
  const auto f = [&](double v, double x) { return t.g(v, x); };
  const double a = path_integral(fine, f, std::sqrt(2.0), 30.0, 0.5);
  const double b = path_integral(coarse, f, std::sqrt(2.0), 30.0, 0.5);
  EXPECT_LT(std::abs(a - b), 0.01 * a);
}

TEST(SampleY, InfimumIsSigmaB) {
  YConfig cfg;
  cfg.pilot_per_bin = 10;
  const auto y = sample_Y(table30(), cfg, 300, 3, false);
  ASSERT_EQ(y.draws.size(), 300u);
  std::size_t incomplete = 0;
  for (const auto& d : y.draws) {
    EXPECT_GE(d.b, 0.0);
    EXPECT_LE(d.b, cfg.b_max);
    if (!d.path.completed) {
      ++incomplete;
      EXPECT_EQ(d.iw, 0.0);
      continue;
    }
    double lowest = 0.0;
    for (double v : d.path.values) lowest = std::min(lowest, -cfg.sigma * v);
    EXPECT_GE(lowest, -cfg.sigma * d.b - 1e-12);
    EXPECT_DOUBLE_EQ(d.y_at(d.path.t_b, cfg.sigma), -cfg.sigma * d.b);
  }
  EXPECT_LE(incomplete, y.flagged);
  EXPECT_GT(y.c1.mean, 0.0);
  EXPECT_GT(y.ess, 0.0);
}

TEST(SampleY, RejectsBadProposal) {
  YConfig cfg;
  cfg.uniform_mix = 0.0;
  EXPECT_THROW(sample_Y(table30(), cfg, 10, 1), ConfigError);
}

Backbone some_backbone() {
  YConfig cfg;
  cfg.pilot_per_bin = 5;
  const auto y = sample_Y(table30(), cfg, 40, 4, false);
  for (const auto& d : y.draws) {
    if (d.path.completed && d.iw > 0.0) return d;
  }
  throw std::runtime_error("no complete backbone");
}

TEST(Decoration, EmptyWindowKeepsOnlyZero) {
  DecorationConfig cfg;
  cfg.zeta_max = 0.0;
  const auto d = sample_decoration(some_backbone(), cfg, 1);
  EXPECT_EQ(d.q.atoms(), std::vector<double>{0.0});
  EXPECT_TRUE(d.candidates.empty());
}

TEST(Decoration, AtomsAreNonnegativeWithZeroAsMinimum) {
  const auto bb = some_backbone();
  DecorationConfig cfg;
  cfg.zeta_max = 4.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto d = sample_decoration(bb, cfg, seed);
    EXPECT_EQ(d.q.min(), 0.0);
    EXPECT_GE(d.q.count({0.0, 0.0}), 1u);
    EXPECT_LE(d.q.atoms().back(), cfg.q_max);
    EXPECT_GE(d.atoms_total, d.q.size());
    for (const auto& c : d.candidates) {
      EXPECT_GE(c.s, 0.0);
      EXPECT_LE(c.s, cfg.zeta_max);
      EXPECT_DOUBLE_EQ(c.y, bb.y_at(c.s, cfg.sigma));
    }
  }
  DecorationConfig too_long;
  too_long.zeta_max = 100.0;
  EXPECT_THROW(sample_decoration(bb, too_long, 0), ConfigError);
}

TEST(Ppp, MeanCountAndLeftmostLaw) {
  const int n = 10'000;
  std::vector<double> count(n), leftmost, c1(n), c2(n);
  for (int i = 0; i < n; ++i) {
    const auto p = sample_ppp(0.0, 100 + i);
    count[i] = static_cast<double>(p.size());
    if (!p.empty()) leftmost.push_back(p.front());
    c1[i] = static_cast<double>(std::count_if(p.begin(), p.end(), [](double x) { return x < -1.0; }));
    c2[i] = static_cast<double>(std::count_if(p.begin(), p.end(), [](double x) { return x >= -1.0; }));
  }
  const auto e = stats::mean_se(count);
  EXPECT_LT(std::abs(e.mean - 1.0), 3.0 * e.se);
  // Leftmost atom given at least one atom on (-inf, 0]: P(min <= x) = (1 - exp(-e^x)) / (1 - e^{-1}).
  const double norm = -std::expm1(-1.0);
  const auto ks = stats::ks_one_sample(leftmost, [&](double x) { return -std::expm1(-std::exp(x)) / norm; });
  EXPECT_GT(ks.pvalue, 0.01);
  EXPECT_LT(std::abs(stats::pearson(c1, c2).mean), 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Ppp, WholeLineLeftmostIsGumbel) {
  // With a = 3 the chance of no atom is exp(-e^3); the minimum law is 1 - exp(-e^x).
  std::vector<double> m;
  for (int i = 0; i < 5000; ++i) {
    const auto p = sample_ppp(3.0, 50'000 + i);
    if (!p.empty()) m.push_back(p.front());
  }
  const auto ks = stats::ks_one_sample(m, [](double x) { return -std::expm1(-std::exp(x)); });
  EXPECT_GT(ks.pvalue, 0.01);
}

TEST(PppPrime, ConditionalPoissonCounts) {
  const int n = 10'000;
  double dev = 0.0, var = 0.0;
  std::vector<double> counts(n);
  for (int i = 0; i < n; ++i) {
    const auto p = sample_ppp_prime(7000 + i, 1.0);
    EXPECT_EQ(p.atoms.front(), 0.0);
    // Atoms in (0, 1]; the atom at 0 is the fixed one.
    const double k = static_cast<double>(
        std::count_if(p.atoms.begin() + 1, p.atoms.end(), [](double x) { return x <= 1.0; }));
    const double mean = p.e * (std::exp(1.0) - 1.0);
    dev += k - mean;
    var += mean;
    counts[i] = k;
  }
  EXPECT_LT(std::abs(dev / std::sqrt(var)), 3.0);
  const auto e = stats::mean_se(counts);
  EXPECT_LT(std::abs(e.mean - (std::exp(1.0) - 1.0)), 3.0 * e.se);
}

TEST(Kernel, ZeroWeightsGiveZeroKernel) {
  KernelSpec s;
  s.alpha = {0.0};
  s.sets = {{0.0, 1.0}};
  s.v_max = 0.5;
  s.runs = 20;
  const auto k = estimate_kernel(s, 1);
  for (std::size_t i = 0; i < k.rows(); ++i)
    for (std::size_t j = 0; j < k.cols(); ++j) EXPECT_EQ(k.at(i, j), 0.0);
  EXPECT_EQ(k.origin(), 0.0);
}

TEST(Kernel, ExactFirstRowAndBounds) {
  KernelSpec s;
  s.alpha = {1.0};
  s.sets = {{0.0, 2.0}};
  s.v_max = 1.0;
  s.dv = 0.5;
  s.runs = 200;
  const auto k = estimate_kernel(s, 2);
  for (std::size_t j = 0; j < k.cols(); ++j) {
    const double x = s.x_lo + static_cast<double>(j) * s.dx;
    const double expect = (x <= 0.0 && -x <= 2.0 + 1e-12 && -x >= -1e-12) ? 1.0 - std::exp(-1.0) : 0.0;
    EXPECT_NEAR(k.at(0, j), expect, 1e-12) << x;
  }
  EXPECT_NEAR(k.origin(), 0.5 * (1.0 - std::exp(-1.0)), 1e-15);
  for (std::size_t i = 0; i < k.rows(); ++i)
    for (std::size_t j = 0; j < k.cols(); ++j) {
      EXPECT_GE(k.at(i, j), 0.0);
      EXPECT_LE(k.at(i, j), 1.0);
    }
  EXPECT_EQ(k.delta(2.0, -1.0), 0.0);
  EXPECT_EQ(k.delta(0.5, 50.0), 0.0);
}

TEST(WeightedCount, ShiftsTheSets) {
  const PointMeasure m({0.0, 0.5, 2.0});
  EXPECT_EQ(weighted_count(m, {1.0, 2.0}, {{0.0, 1.0}, {1.5, 2.5}}), 1.0 * 2 + 2.0 * 1);
  EXPECT_EQ(weighted_count(m, {1.0}, {{0.0, 1.0}}, 1.0), 1.0);
  EXPECT_THROW(weighted_count(m, {1.0}, {}), ConfigError);
}

std::vector<DecorationSample> trivial_pool() {
  DecorationSample d;
  d.q = PointMeasure({0.0});
  return {d};
}

TEST(LimitMeasure, DegenerateDecorationsReduceToThePpp) {
  const Interval window{-1.0, 1.0};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto l = sample_L(window, trivial_pool(), 12.0, seed, LimitVariant::kL);
    std::vector<double> inside;
    for (double x : l.ppp)
      if (x >= window.lo && x <= window.hi) inside.push_back(x);
    EXPECT_EQ(l.window.atoms(), inside);
  }
}

TEST(LimitMeasure, MinimumEqualsPppMinimum) {
  const auto bb = some_backbone();
  DecorationConfig cfg;
  cfg.zeta_max = 3.0;
  std::vector<DecorationSample> pool;
  for (std::uint64_t s = 0; s < 20; ++s) pool.push_back(sample_decoration(bb, cfg, s));
  const Interval window{-30.0, 1.0};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto l = sample_L(window, pool, cfg.q_max, seed, LimitVariant::kL);
    if (l.ppp.empty()) continue;
    EXPECT_EQ(l.window.min(), l.ppp.front());
    for (double x : l.window.atoms()) {
      EXPECT_GE(x, window.lo);
      EXPECT_LE(x, window.hi);
    }
  }
  const auto lp = sample_L({-1.0, 1.0}, pool, cfg.q_max, 3, LimitVariant::kLPrime);
  EXPECT_EQ(lp.window.min(), 0.0);
}

TEST(LimitMeasure, DecorationsAddMass) {
  const auto bb = some_backbone();
  DecorationConfig cfg;
  cfg.zeta_max = 3.0;
  std::vector<DecorationSample> pool;
  for (std::uint64_t s = 0; s < 50; ++s) pool.push_back(sample_decoration(bb, cfg, s));
  const Interval window{-1.0, 1.0};
  std::vector<double> diff;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto l = sample_L(window, pool, cfg.q_max, seed, LimitVariant::kL);
    const auto p = std::count_if(l.ppp.begin(), l.ppp.end(),
                                 [&](double x) { return x >= window.lo && x <= window.hi; });
    const double d = static_cast<double>(l.window.size()) - static_cast<double>(p);
    EXPECT_GE(d, 0.0);
    diff.push_back(d);
  }
  const auto st = stats::sign_test(diff);
  EXPECT_LT(st.pvalue, 0.01);
}

TEST(ResamplePool, UnitWeightsAndScaleInvariance) {
  std::vector<DecorationSample> w(4);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i].b = static_cast<double>(i);
    w[i].weight = static_cast<double>(i);
  }
  const auto a = resample_pool(w, 500, 9);
  for (auto& d : w) d.weight *= 8.0;
  const auto b = resample_pool(w, 500, 9);
  ASSERT_EQ(a.size(), 500u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].weight, 1.0);
    EXPECT_NE(a[i].b, 0.0);  // zero-weight entries are never drawn
    EXPECT_EQ(a[i].b, b[i].b);
  }
  for (auto& d : w) d.weight = 0.0;
  EXPECT_THROW(resample_pool(w, 5, 1), DiagnosticsError);
}

}  // namespace
}  // namespace bbm
