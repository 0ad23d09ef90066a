#pragma once

#include <vector>

#include "bbm/engine.hpp"
#include "bbm/point_measure.hpp"

namespace bbm {

struct BranchRecord {
  double tau;            // branch time on the leaf's lineage
  PointMeasure siblings;  // positions relative to the leaf of the off-path descendants
};

struct BackwardDecomposition {
  NodeId leaf = kNoNode;
  double t = 0.0;
  double x1 = 0.0;
  // Backward path Y_t(s) = X_{leaf,t}(t - s) - X_leaf(t) at s = t - grid time,
  // increasing in s, always starting at (0, 0).
  std::vector<double> s;
  std::vector<double> y;
  std::vector<BranchRecord> branches;  // tau strictly decreasing
};

// Path of the leaf's lineage on the arena's checkpoint grid, as positions
// aligned with arena.grid() (only grid times not after the leaf's event time).
std::vector<double> grid_path(const LineageArena& arena, NodeId leaf);

BackwardDecomposition backward_decomposition(const LineageArena& arena,
                                             const PopulationSnapshot& snapshot, NodeId leaf);

// delta_0 + sum of sibling measures with tau > t - zeta.
PointMeasure decoration_window(const BackwardDecomposition& d, double zeta);

// Event time of the most recent common ancestor; tau_{i,i} is the node's own
// event time.
double pair_branch_time(const LineageArena& arena, NodeId i, NodeId j);

struct PathEventReport {
  double t = 0.0;
  double x = 0.0;
  double eta = 0.0;
  double m_t = 0.0;
  double resolution = 0.0;  // largest grid gap used
  std::size_t checked = 0;  // |J_eta|
  bool e1 = true;
  bool e2 = true;
  bool e3 = true;
  bool a = true;
};

// Evaluates E1-E3 on the checkpoint grid for every snapshot particle within
// eta of m_t. The grid must cover [0, t] with gaps at most max_gap.
PathEventReport check_path_events(const LineageArena& arena, const PopulationSnapshot& snapshot,
                                  double m_t, double x, double eta, double max_gap = 0.1);

}  // namespace bbm
