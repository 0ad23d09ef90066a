#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "bbm/engine.hpp"
#include "bbm/errors.hpp"
#include "bbm/frontstats.hpp"
#include "bbm/stats.hpp"

namespace bbm {
namespace {

SimResult run_simple(double t, std::uint64_t seed, std::vector<double> grid = {}) {
  return simulate(ModelParams{}, t, seed, {}, std::move(grid));
}

TEST(ModelParams, DefaultsAreCritical) {
  ModelParams p;
  EXPECT_TRUE(p.is_critical());
  EXPECT_NO_THROW(p.validate());
  p.sigma = -1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  ModelParams q;
  q.rho = 3.0;
  EXPECT_FALSE(q.is_critical());
}

TEST(Simulate, TimeZeroIsTheRoot) {
  const auto r = run_simple(0.0, 1);
  ASSERT_EQ(r.snapshot.size(), 1u);
  EXPECT_EQ(r.snapshot.time, 0.0);
  EXPECT_EQ(r.snapshot.atoms[0].position, 0.0);
  EXPECT_EQ(r.snapshot.atoms[0].node, 0u);
  EXPECT_EQ(r.arena.size(), 1u);
}

TEST(Simulate, NegativeHorizonIsRejected) {
  EXPECT_THROW(run_simple(-1.0, 1), ConfigError);
  EXPECT_THROW(run_simple(2.0, 1, {3.0}), ConfigError);
}

TEST(Simulate, BitIdenticalForIdenticalSeeds) {
  const auto a = run_simple(5.0, 42, {1.0, 2.5});
  const auto b = run_simple(5.0, 42, {1.0, 2.5});
  ASSERT_EQ(a.snapshot.size(), b.snapshot.size());
  for (std::size_t i = 0; i < a.snapshot.size(); ++i) {
    EXPECT_EQ(a.snapshot.atoms[i].position, b.snapshot.atoms[i].position);
    EXPECT_EQ(a.snapshot.atoms[i].node, b.snapshot.atoms[i].node);
  }
  ASSERT_EQ(a.arena.size(), b.arena.size());
  for (std::size_t i = 0; i < a.arena.size(); ++i) {
    EXPECT_EQ(a.arena.nodes()[i].event_time, b.arena.nodes()[i].event_time);
    EXPECT_EQ(a.arena.nodes()[i].event_pos, b.arena.nodes()[i].event_pos);
  }
  const auto c = run_simple(5.0, 43, {1.0, 2.5});
  EXPECT_NE(a.snapshot.leftmost(), c.snapshot.leftmost());
}

TEST(Simulate, SnapshotSortedAndArenaConsistent) {
  const auto r = run_simple(6.0, 9, {1.0, 2.0, 3.0});
  const auto& atoms = r.snapshot.atoms;
  EXPECT_TRUE(std::is_sorted(atoms.begin(), atoms.end(),
                             [](const Atom& a, const Atom& b) { return a.position < b.position; }));
  std::vector<NodeId> ids;
  for (const auto& a : atoms) ids.push_back(a.node);
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());
  std::size_t branches = 0;
  for (const auto& n : r.arena.nodes()) {
    if (n.parent != kNoNode) {
      const auto& p = r.arena.node(n.parent);
      EXPECT_EQ(p.event_time, n.birth_time);
      EXPECT_EQ(p.event_pos, n.birth_pos);
      EXPECT_EQ(p.kind, EventKind::kBranch);
    }
    if (n.kind == EventKind::kBranch) {
      ++branches;
      EXPECT_EQ(r.arena.node(n.first_child).parent, n.id);
      EXPECT_EQ(r.arena.node(n.first_child + 1).parent, n.id);
    }
  }
  EXPECT_EQ(branches + 1, r.snapshot.size());
  for (const auto& a : atoms) {
    const auto line = r.arena.lineage(a.node);
    EXPECT_EQ(line.front(), 0u);
    EXPECT_EQ(line.back(), a.node);
    EXPECT_EQ(r.arena.ancestral_position(a.node, 0.0), 0.0);
    EXPECT_EQ(r.arena.ancestral_position(a.node, 6.0), a.position);
  }
}

TEST(AncestralPosition, ContinuousAtBranchPointsAndStrictOffGrid) {
  const auto r = run_simple(4.0, 5, {1.0, 2.0, 3.0});
  for (const auto& n : r.arena.nodes()) {
    if (n.kind != EventKind::kBranch) continue;
    const auto& c0 = r.arena.node(n.first_child);
    const auto& c1 = r.arena.node(n.first_child + 1);
    EXPECT_EQ(c0.birth_pos, c1.birth_pos);
    EXPECT_EQ(c0.birth_pos, n.event_pos);
  }
  const NodeId leaf = r.snapshot.atoms.front().node;
  EXPECT_NO_THROW(r.arena.ancestral_position(leaf, 2.0));
  EXPECT_THROW(r.arena.ancestral_position(leaf, 1.2345), QueryError);
  // Children at a branch report the same ancestral position at the branch time.
  const auto line = r.arena.lineage(leaf);
  for (NodeId id : line) {
    const auto& n = r.arena.node(id);
    if (n.kind == EventKind::kBranch) {
      EXPECT_EQ(r.arena.ancestral_position(leaf, n.event_time), n.event_pos);
    }
  }
}

TEST(Simulate, MeanPopulationIsExponential) {
  const int reps = 10'000;
  std::vector<double> n(reps);
  for (int i = 0; i < reps; ++i) {
    SimConfig c;
    c.horizon = 2.0;
    c.seed = 1000 + i;
    c.record_arena = false;
    n[i] = static_cast<double>(run(c).snapshot.size());
  }
  const auto e = stats::mean_se(n);
  EXPECT_LT(std::abs(e.mean - std::exp(2.0)), 3.0 * e.se);
}

// Forward equations dp_k/dt = (k-1) p_{k-1} - k p_k integrated by RK4.
std::vector<double> yule_law(double t, int kmax) {
  std::vector<double> p(kmax + 1, 0.0);
  p[1] = 1.0;
  auto deriv = [&](const std::vector<double>& q) {
    std::vector<double> d(kmax + 1, 0.0);
    for (int k = 1; k <= kmax; ++k) d[k] = (k - 1) * q[k - 1] - k * q[k];
    return d;
  };
  const int steps = 20'000;
  const double h = t / steps;
  for (int s = 0; s < steps; ++s) {
    const auto k1 = deriv(p);
    std::vector<double> tmp(p);
    for (int k = 0; k <= kmax; ++k) tmp[k] = p[k] + 0.5 * h * k1[k];
    const auto k2 = deriv(tmp);
    for (int k = 0; k <= kmax; ++k) tmp[k] = p[k] + 0.5 * h * k2[k];
    const auto k3 = deriv(tmp);
    for (int k = 0; k <= kmax; ++k) tmp[k] = p[k] + h * k3[k];
    const auto k4 = deriv(tmp);
    for (int k = 0; k <= kmax; ++k) p[k] += h / 6.0 * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k]);
  }
  return p;
}

TEST(Simulate, PopulationLawMatchesForwardEquations) {
  const int kmax = 10;
  const auto p = yule_law(1.0, kmax);
  std::vector<double> probs, obs(kmax + 1, 0.0);
  double tail = 1.0;
  for (int k = 1; k <= kmax; ++k) {
    probs.push_back(p[k]);
    tail -= p[k];
  }
  probs.push_back(tail);
  const int reps = 10'000;
  for (int i = 0; i < reps; ++i) {
    SimConfig c;
    c.horizon = 1.0;
    c.seed = 77'000 + i;
    c.record_arena = false;
    const auto n = static_cast<int>(run(c).snapshot.size());
    obs[std::min(n, kmax + 1) - 1] += 1.0;
  }
  const auto r = stats::chi_square_gof(obs, probs);
  EXPECT_GT(r.pvalue, 0.01);
}

TEST(Simulate, CheckpointIncrementsAreGaussian) {
  const ModelParams p;
  const double h = 0.1;
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(i * h);
  const int reps = 10'000;
  std::vector<double> first(reps), second(reps), standardized(reps);
  for (int i = 0; i < reps; ++i) {
    SimConfig c;
    c.horizon = 1.0;
    c.seed = 5000 + i;
    c.branching = false;
    c.checkpoints = grid;
    const auto r = run(c);
    const NodeId leaf = r.snapshot.atoms.front().node;
    const double x0 = r.arena.ancestral_position(leaf, grid[1]);
    const double x1 = r.arena.ancestral_position(leaf, grid[2]);
    const double x2 = r.arena.ancestral_position(leaf, grid[3]);
    first[i] = x1 - x0;
    second[i] = x2 - x1;
    standardized[i] = (first[i] - p.rho * h) / (p.sigma * std::sqrt(h));
  }
  const auto ks = stats::ks_one_sample(standardized, [](double x) { return stats::normal_cdf(x); });
  EXPECT_GT(ks.pvalue, 0.01);
  const auto e = stats::mean_se(first);
  double ss = 0.0;
  for (double v : first) ss += (v - e.mean) * (v - e.mean);
  const double chi = ss / (p.sigma * p.sigma * h);
  const double sf = stats::chi2_sf(chi, reps - 1);
  EXPECT_GT(std::min(sf, 1.0 - sf), 0.005);
  const auto corr = stats::pearson(first, second);
  EXPECT_LT(std::abs(corr.mean), 3.0 * corr.se);
}

TEST(Simulate, CapRaisesResourceError) {
  SimConfig c;
  c.horizon = 12.0;
  c.seed = 3;
  c.record_arena = false;
  c.prune.cap = 50;
  try {
    run(c);
    FAIL() << "expected a resource error";
  } catch (const ResourceError& e) {
    EXPECT_NE(std::string(e.what()).find("50"), std::string::npos);
  }
}

TEST(Simulate, PrunedMassKeepsMartingaleMeans) {
  const int reps = 4000;
  std::vector<double> m(reps), z(reps);
  for (int i = 0; i < reps; ++i) {
    SimConfig c;
    c.horizon = 6.0;
    c.seed = 20'000 + i;
    c.prune = PruneConfig{true, 3.0, 50'000'000};
    c.record_arena = false;
    const auto r = run(c);
    m[i] = additive_martingale(r.snapshot, true);
    z[i] = derivative_martingale(r.snapshot, true);
  }
  const auto em = stats::mean_se(m), ez = stats::mean_se(z);
  EXPECT_LT(std::abs(em.mean - 1.0), 3.0 * em.se);
  EXPECT_LT(std::abs(ez.mean), 3.0 * ez.se);
}

TEST(Simulate, PruningKeepsTheFrontLaw) {
  const int reps = 1000;
  std::vector<double> a(reps), b(reps), ca(reps), cb(reps);
  for (int i = 0; i < reps; ++i) {
    for (double window : {6.0, 10.0}) {
      SimConfig c;
      c.horizon = 8.0;
      c.seed = 40'000 + i;
      c.prune = PruneConfig{true, window, 50'000'000};
      c.record_arena = false;
      const auto r = run(c);
      const double x1 = r.snapshot.leftmost();
      const double count = static_cast<double>(std::count_if(
          r.snapshot.atoms.begin(), r.snapshot.atoms.end(),
          [&](const Atom& at) { return at.position <= x1 + 2.0; }));
      (window == 6.0 ? a : b)[i] = x1;
      (window == 6.0 ? ca : cb)[i] = count;
    }
  }
  EXPECT_GT(stats::ks_two_sample(a, b).pvalue, 0.01);
  EXPECT_GT(stats::ks_two_sample(ca, cb).pvalue, 0.01);
}

TEST(StoppingLine, VanishingLevelIsHitByTheRoot) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto r = stopping_line(ModelParams{}, 1e-6, s, 1000);
    EXPECT_EQ(r.count, 1u);
    EXPECT_EQ(r.hits.size(), 1u);
  }
}

TEST(StoppingLine, AdditiveMartingaleOnTheLine) {
  // H_k is heavy tailed, so the level is kept low.
  const int reps = 20'000;
  const double k = 1.5;
  std::vector<double> m(reps);
  for (int i = 0; i < reps; ++i) {
    const auto r = stopping_line(ModelParams{}, k, 900 + i, 50'000'000);
    EXPECT_EQ(r.count, r.hits.size());
    EXPECT_DOUBLE_EQ(r.z, k * std::exp(-k) * static_cast<double>(r.count));
    m[i] = std::exp(-k) * static_cast<double>(r.count);
  }
  const auto e = stats::mean_se(m);
  EXPECT_LT(std::abs(e.mean - 1.0), 3.0 * e.se);
}

TEST(StoppingLine, HitsAreFirstPassages) {
  SimConfig c;
  c.horizon = INFINITY;
  c.absorb_level = 3.0;
  c.seed = 8;
  const auto r = run(c);
  ASSERT_FALSE(r.absorbed.empty());
  for (const auto& h : r.absorbed) {
    const auto& n = r.arena.node(h.node);
    EXPECT_EQ(n.kind, EventKind::kAbsorbed);
    EXPECT_EQ(n.event_pos, 3.0);
    EXPECT_EQ(n.event_time, h.time);
    for (NodeId id : r.arena.lineage(h.node)) {
      if (id != h.node) EXPECT_LT(r.arena.node(id).event_pos, 3.0);
    }
  }
  EXPECT_TRUE(r.snapshot.atoms.empty());
}

TEST(StoppingLine, CapIsEnforced) {
  EXPECT_THROW(stopping_line(ModelParams{}, 12.0, 1, 100), ResourceError);
}

TEST(StoppingLine, ZkTracksTheDerivativeMartingale) {
  // Coupled runs: passage levels recorded on the same tree as Z(t).
  const int reps = 300;
  std::vector<double> z_lo(reps), z_hi(reps), zt(reps);
  for (int i = 0; i < reps; ++i) {
    SimConfig c;
    c.horizon = INFINITY;
    c.absorb_level = 7.0;
    c.passage_levels = {4.0, 6.0};
    c.seed = 60'000 + i;
    c.record_arena = false;
    const auto r = run(c);
    const double h7 = static_cast<double>(r.absorbed.size());
    zt[i] = 7.0 * std::exp(-7.0) * h7;
    z_lo[i] = 4.0 * std::exp(-4.0) * static_cast<double>(r.passages[0].size());
    z_hi[i] = 6.0 * std::exp(-6.0) * static_cast<double>(r.passages[1].size());
  }
  EXPECT_LT(stats::pearson(z_lo, zt).mean, stats::pearson(z_hi, zt).mean);
}

TEST(Bridge, CrossingProbabilityFormula) {
  EXPECT_DOUBLE_EQ(bridge_cross_probability(0.0, 0.0, 1.0, 1.0, 1.0), std::exp(-2.0));
  EXPECT_DOUBLE_EQ(bridge_cross_probability(0.0, 1.0, 1.0, 1.0, 1.0), 1.0);
  Stream rng(1, 0, Purpose::kAux);
  for (int i = 0; i < 1000; ++i) {
    const double u = bridge_first_passage(0.0, 0.2, 0.5, 0.3, 2.0, rng);
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 0.3);
  }
}

}  // namespace
}  // namespace bbm
