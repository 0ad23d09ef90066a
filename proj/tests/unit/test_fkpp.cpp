#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "bbm/errors.hpp"
#include "bbm/fkpp.hpp"
#include "bbm/rng.hpp"
#include "bbm/stats.hpp"

namespace bbm {
namespace {

std::size_t grid_points(const FkppSpec& s) {
  return static_cast<std::size_t>(std::llround(2.0 * s.half_width / s.dx)) + 1;
}

TEST(Fkpp, ConstantProfilesAreFixedPoints) {
  for (double level : {0.0, 1.0}) {
    FkppSpec s;
    s.half_width = 5.0;
    s.horizon = s.dt;
    s.track_front = false;
    s.initial.assign(grid_points(s), level);
    const auto t = solve_fkpp(s);
    for (double v : t.slices().back().u) EXPECT_NEAR(v, level, 1e-14);
  }
}

TEST(Fkpp, ReactionOffIsTheDriftedGaussian) {
  FkppSpec s;
  s.dx = 0.01;
  s.dt = 1e-4;
  s.half_width = 15.0;
  s.horizon = 1.0;
  s.reaction = false;
  s.track_front = false;
  s.dense_until = 0.0;
  s.store_every = 0.5;
  const auto t = solve_fkpp(s);
  const auto& sl = t.slices()[t.slice_index(1.0)];
  double worst = 0.0;
  for (std::size_t i = 0; i < sl.u.size(); ++i) {
    const double x = sl.x0 + static_cast<double>(i) * s.dx;
    worst = std::max(worst, std::abs(sl.u[i] - stats::normal_cdf((x - 2.0) / std::sqrt(2.0))));
  }
  EXPECT_LT(worst, 1e-3);
}

FkppTable standard(double horizon, double shift = 0.0) {
  FkppSpec s;
  s.horizon = horizon;
  s.shift = shift;
  s.store_every = 0.5;
  return solve_fkpp(s);
}

TEST(Fkpp, LevelCurveDefinition) {
  const auto t = standard(5.0);
  for (double time : {1.0, 2.5, 5.0}) {
    const double m = level_position(t, time, 0.5);
    EXPECT_NEAR(t.g(time, m), 0.5, 1e-12);
    EXPECT_GE(level_position(t, time, 0.99), m);
    EXPECT_LE(level_position(t, time, 0.01), m);
    EXPECT_NEAR(t.median_at(time), m, 1e-12);
  }
  EXPECT_THROW(level_position(t, 1.0, 1.0), DomainError);
  EXPECT_THROW(level_position(t, 1.01, 0.5), QueryError);
}

TEST(Fkpp, LookupMatchesStoredNodesAndIsMonotone) {
  const auto t = standard(5.0);
  const auto k = t.slice_index(2.0);
  const auto& sl = t.slices()[k];
  for (std::size_t i = 0; i < sl.u.size(); i += 97) {
    EXPECT_NEAR(t.g(2.0, sl.x0 + static_cast<double>(i) * t.dx()), sl.u[i], 1e-12);
  }
  Stream rng(1, 0, Purpose::kAux);
  for (int i = 0; i < 1000; ++i) {
    const double time = 5.0 * rng.uniform();
    const double a = -30.0 + 60.0 * rng.uniform(), b = -30.0 + 60.0 * rng.uniform();
    EXPECT_LE(t.g(time, std::min(a, b)), t.g(time, std::max(a, b)));
  }
  // Below the grid the stretching bound takes over and stays monotone.
  EXPECT_LE(t.g(5.0, -200.0), t.g(5.0, -150.0));
  EXPECT_GE(t.g(5.0, -150.0), 0.0);
  EXPECT_THROW(t.g(5.5, 0.0), QueryError);
}

TEST(Fkpp, TranslationAndComparison) {
  const auto a = standard(4.0), b = standard(4.0, 1.5);
  for (double time : {0.5, 2.0, 4.0}) {
    for (double x = -10.0; x <= 15.0; x += 0.37) {
      EXPECT_NEAR(b.g(time, x + 1.5), a.g(time, x), 1e-9);
      EXPECT_LE(b.g(time, x), a.g(time, x) + 1e-12);
    }
  }
}

TEST(Fkpp, GridRefinementConverges) {
  std::vector<double> m;
  for (double h : {0.04, 0.02, 0.01}) {
    FkppSpec s;
    s.dx = h;
    s.dt = h / 2.0;
    s.horizon = 5.0;
    s.store_every = 1.0;
    m.push_back(level_position(solve_fkpp(s), 5.0, 0.5));
  }
  const double d1 = std::abs(m[1] - m[0]), d2 = std::abs(m[2] - m[1]);
  // First order in dt: the ratio should be near 1/2; allow a factor 4 either way.
  EXPECT_LT(d2 / d1, 2.0);
  EXPECT_GT(d2 / d1, 0.125);
}

TEST(Fkpp, ExplicitSchemeStabilityAndAgreement) {
  FkppSpec s;
  s.scheme = Scheme::kExplicit;
  s.dx = 0.05;
  s.dt = 0.01;
  EXPECT_THROW(solve_fkpp(s), ConfigError);
  s.dt = 1e-3;
  s.horizon = 3.0;
  s.store_every = 1.0;
  const auto e = solve_fkpp(s);
  FkppSpec si = s;
  si.scheme = Scheme::kSemiImplicit;
  const auto i = solve_fkpp(si);
  EXPECT_NEAR(level_position(e, 3.0, 0.5), level_position(i, 3.0, 0.5), 0.02);
  EXPECT_EQ(scheme_name(Scheme::kExplicit), "explicit");
}

TEST(Fkpp, BadSpecsAreRejected) {
  FkppSpec s;
  s.horizon = 1.005;
  EXPECT_THROW(solve_fkpp(s), ConfigError);
  s.horizon = 1.0;
  s.initial = {0.0, 1.0};
  EXPECT_THROW(solve_fkpp(s), ConfigError);
  FkppSpec d;
  d.dx = 0.0;
  EXPECT_THROW(solve_fkpp(d), ConfigError);
}

TEST(Wave, ProfileConvergesMonotonically) {
  FkppSpec s;
  s.horizon = 80.0;
  s.store_every = 10.0;
  const auto t = solve_fkpp(s);
  std::vector<WaveProfile> w;
  for (double time : {10.0, 20.0, 40.0, 80.0}) w.push_back(wave_profile(t, time));
  for (const auto& p : w) EXPECT_EQ(p.at(0.0), 0.5);
  EXPECT_LE(w[0].at(-3.0), w[1].at(-3.0));
  EXPECT_LE(w[1].at(-3.0), w[2].at(-3.0));
  EXPECT_GE(w[0].at(3.0), w[1].at(3.0));
  EXPECT_GE(w[1].at(3.0), w[2].at(3.0));
  auto sup = [](const WaveProfile& a, const WaveProfile& b) {
    double d = 0.0;
    for (double x = -20.0; x <= 20.0; x += 0.02) d = std::max(d, std::abs(a.at(x) - b.at(x)));
    return d;
  };
  EXPECT_LT(sup(w[2], w[3]), sup(w[0], w[1]));
  // Level positions order with eps on a fixed slice.
  EXPECT_LT(level_position(t, 40.0, 0.2), level_position(t, 40.0, 0.8));
}

TEST(Wave, QuantileInvertsTheProfile) {
  const auto w = wave_profile(standard(10.0), 10.0);
  for (double p : {1e-4, 0.01, 0.3, 0.5, 0.9}) EXPECT_NEAR(w.at(w.quantile(p)), p, 2e-3 * p + 1e-9);
  EXPECT_THROW(w.quantile(0.0), DomainError);
}

WaveProfile synthetic(const std::function<double(double)>& f) {
  WaveProfile w;
  w.dx = 0.01;
  w.x_lo = -20.0;
  for (int i = 0; i <= 4000; ++i) w.w.push_back(f(w.x_lo + i * w.dx));
  return w;
}

TEST(Tail, SelfFitRecoversTheConstant) {
  const auto w = synthetic([](double x) { return 0.7 * std::abs(x) * std::exp(x); });
  const auto f = tail_constant(w);
  EXPECT_NEAR(f.c, 0.7, 1e-6);
  EXPECT_LT(f.variation, 1e-9);
  EXPECT_FALSE(f.flagged);
  EXPECT_NEAR(f.affine_c, 0.7, 1e-9);
  EXPECT_NEAR(f.affine_d, 0.0, 1e-9);
}

TEST(Tail, ExponentialOnlyAnsatzDrifts) {
  const auto w = synthetic([](double x) { return 0.7 * std::abs(x) * std::exp(x); });
  EXPECT_GT(tail_constant_exponential(w).variation, 0.3);
  EXPECT_THROW(tail_constant(w, -4.0, 1.0), ConfigError);
}

TEST(Centering, FitOfAnExactCurve) {
  // A table whose medians follow 1.5 log t + 0.3 - 2/sqrt(t) exactly.
  std::vector<FkppSlice> slices;
  for (int k = 1; k <= 20; ++k) {
    FkppSlice s;
    s.t = k;
    s.median = 1.5 * std::log(s.t) + 0.3 - 2.0 / std::sqrt(s.t);
    s.u = {0.0, 1.0};
    slices.push_back(s);
  }
  FkppTable t(FkppSpec{}, std::move(slices), 0.0);
  const auto f = fit_centering(t, 2.0, 20.0);
  EXPECT_NEAR(f.c_b, 0.3, 1e-10);
  EXPECT_NEAR(f.slope, -2.0, 1e-10);
  EXPECT_THROW(fit_centering(t, 30.0, 40.0), QueryError);
}

}  // namespace
}  // namespace bbm
