#include <gtest/gtest.h>

#include <cmath>

#include "bbm/engine.hpp"
#include "bbm/errors.hpp"
#include "bbm/genealogy.hpp"
#include "bbm/rng.hpp"

namespace bbm {
namespace {

// Root branches at tau = 1 at position 0.5; leaves end at t = 2 at p1 < p2.
struct Fixture {
  LineageArena arena;
  PopulationSnapshot snap;
  double tau = 1.0, p1 = 0.2, p2 = 1.5;

  Fixture() {
    arena.set_grid({0.0, 1.0, 2.0});
    LineageNode root;
    root.event_time = tau;
    root.event_pos = 0.5;
    root.kind = EventKind::kBranch;
    const NodeId r = arena.add_node(root);
    for (double p : {p1, p2}) {
      LineageNode c;
      c.parent = r;
      c.birth_time = tau;
      c.birth_pos = 0.5;
      c.event_time = 2.0;
      c.event_pos = p;
      c.kind = EventKind::kHorizon;
      arena.add_node(c);
    }
    arena.mutable_node(r).first_child = 1;
    arena.add_checkpoint(0, 0, 0.0);
    arena.add_checkpoint(0, 1, 0.5);
    arena.add_checkpoint(1, 2, p1);
    arena.add_checkpoint(2, 2, p2);
    arena.finalize();
    snap.time = 2.0;
    snap.atoms = {{p1, 1}, {p2, 2}};
  }
};

TEST(Genealogy, HandBuiltFixture) {
  Fixture f;
  const auto d = backward_decomposition(f.arena, f.snap, 1);
  ASSERT_EQ(d.branches.size(), 1u);
  EXPECT_EQ(d.branches[0].tau, f.tau);
  ASSERT_EQ(d.branches[0].siblings.size(), 1u);
  EXPECT_DOUBLE_EQ(d.branches[0].siblings.atoms()[0], f.p2 - f.p1);
  EXPECT_EQ(d.s.front(), 0.0);
  EXPECT_EQ(d.y.front(), 0.0);
  EXPECT_EQ(d.s, (std::vector<double>{0.0, 1.0, 2.0}));
  EXPECT_DOUBLE_EQ(d.y[1], 0.5 - f.p1);
  EXPECT_DOUBLE_EQ(d.y[2], -f.p1);
  EXPECT_EQ(pair_branch_time(f.arena, 1, 2), f.tau);
  EXPECT_EQ(pair_branch_time(f.arena, 2, 1), f.tau);
  EXPECT_EQ(pair_branch_time(f.arena, 0, 2), f.tau);
  EXPECT_EQ(pair_branch_time(f.arena, 1, 1), 2.0);
  EXPECT_THROW(pair_branch_time(f.arena, 1, 7), QueryError);
  EXPECT_THROW(backward_decomposition(f.arena, f.snap, 0), QueryError);
}

TEST(Genealogy, WindowOnFixture) {
  Fixture f;
  const auto d = backward_decomposition(f.arena, f.snap, 1);
  EXPECT_EQ(decoration_window(d, 0.0).atoms(), std::vector<double>{0.0});
  EXPECT_EQ(decoration_window(d, 0.5).size(), 1u);
  EXPECT_EQ(decoration_window(d, 1.5).size(), 2u);
  EXPECT_EQ(decoration_window(d, 2.0).size(), 2u);
  EXPECT_THROW(decoration_window(d, 2.5), ConfigError);
}

TEST(Genealogy, NoBranchingGivesPathIncrements) {
  SimConfig c;
  c.horizon = 1.0;
  c.seed = 4;
  c.branching = false;
  c.checkpoints = {0.0, 0.25, 0.5, 0.75, 1.0};
  const auto r = run(c);
  const NodeId leaf = r.snapshot.atoms[0].node;
  const auto d = backward_decomposition(r.arena, r.snapshot, leaf);
  EXPECT_TRUE(d.branches.empty());
  const auto path = grid_path(r.arena, leaf);
  ASSERT_EQ(d.y.size(), path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    EXPECT_DOUBLE_EQ(d.y[i], path[path.size() - 1 - i] - d.x1);
  }
}

std::vector<double> unit_grid(double t, double h) {
  std::vector<double> g;
  for (int i = 0; i * h <= t + 1e-12; ++i) g.push_back(i * h);
  return g;
}

TEST(Genealogy, SiblingMeasuresPartitionThePopulation) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = simulate(ModelParams{}, 4.0, seed, {}, unit_grid(4.0, 0.5));
    const NodeId leaf = r.snapshot.atoms.front().node;
    const auto d = backward_decomposition(r.arena, r.snapshot, leaf);
    std::size_t total = 1;
    for (const auto& b : d.branches) total += b.siblings.size();
    EXPECT_EQ(total, r.snapshot.size());
    for (std::size_t i = 1; i < d.branches.size(); ++i) {
      EXPECT_LT(d.branches[i].tau, d.branches[i - 1].tau);
    }
    EXPECT_EQ(decoration_window(d, 4.0).size(), r.snapshot.size());
    std::size_t prev = 0;
    for (double z = 0.0; z <= 4.0; z += 0.25) {
      const auto q = decoration_window(d, z);
      EXPECT_GE(q.size(), prev);
      EXPECT_EQ(q.min(), 0.0);
      prev = q.size();
    }
  }
}

TEST(Genealogy, PairTimesAreSymmetric) {
  const auto r = simulate(ModelParams{}, 5.0, 17, {}, {});
  Stream s(3, 0, Purpose::kAux);
  const auto n = r.snapshot.size();
  for (int k = 0; k < 1000; ++k) {
    const NodeId i = r.snapshot.atoms[s.below(n)].node;
    const NodeId j = r.snapshot.atoms[s.below(n)].node;
    const double tij = pair_branch_time(r.arena, i, j);
    EXPECT_EQ(tij, pair_branch_time(r.arena, j, i));
    EXPECT_LE(tij, 5.0);
    if (i != j) EXPECT_LT(tij, 5.0);
  }
}

TEST(PathEvents, VacuousWhenNoParticleInWindow) {
  const auto r = simulate(ModelParams{}, 2.0, 2, {}, unit_grid(2.0, 0.1));
  const auto rep = check_path_events(r.arena, r.snapshot, 1e6, 1.0, 0.1);
  EXPECT_EQ(rep.checked, 0u);
  EXPECT_TRUE(rep.a);
}

TEST(PathEvents, CoarseGridIsRejected) {
  const auto r = simulate(ModelParams{}, 2.0, 2, {}, unit_grid(2.0, 0.5));
  EXPECT_THROW(check_path_events(r.arena, r.snapshot, 0.0, 1.0, 1.0), QueryError);
}

TEST(PathEvents, ProbabilityNondecreasingInX) {
  const int reps = 120;
  const double t = 20.0, eta = 2.0, m_t = 6.68;
  std::vector<int> hits(3, 0);
  const std::vector<double> xs{2.0, 4.0, 8.0};
  for (int i = 0; i < reps; ++i) {
    const auto r = simulate(ModelParams{}, t, 500 + i, PruneConfig{true, 10.0, 50'000'000},
                            unit_grid(t, 0.1));
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (check_path_events(r.arena, r.snapshot, m_t, xs[k], eta).a) ++hits[k];
    }
  }
  EXPECT_LE(hits[0], hits[1]);
  EXPECT_LE(hits[1], hits[2]);
  EXPECT_GT(hits[2], hits[0]);
}

}  // namespace
}  // namespace bbm
