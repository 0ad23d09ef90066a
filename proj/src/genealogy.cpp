#include "bbm/genealogy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bbm/errors.hpp"

namespace bbm {

std::vector<double> grid_path(const LineageArena& arena, NodeId leaf) {
  const auto& grid = arena.grid();
  const double end = arena.node(leaf).event_time;
  const auto count = static_cast<std::size_t>(
      std::upper_bound(grid.begin(), grid.end(), end) - grid.begin());
  std::vector<double> path(count, std::nan(""));
  for (NodeId id : arena.lineage(leaf)) {
    for (const auto& c : arena.checkpoints(id)) {
      if (c.grid_index < count) path[c.grid_index] = c.position;
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (std::isnan(path[i])) {
      throw QueryError("lineage of node " + std::to_string(leaf) + " lacks grid point " +
                       std::to_string(grid[i]));
    }
  }
  return path;
}

BackwardDecomposition backward_decomposition(const LineageArena& arena,
                                             const PopulationSnapshot& snapshot, NodeId leaf) {
  const auto it = std::find_if(snapshot.atoms.begin(), snapshot.atoms.end(),
                               [&](const Atom& a) { return a.node == leaf; });
  if (it == snapshot.atoms.end()) {
    throw QueryError("node " + std::to_string(leaf) + " is not in the snapshot");
  }
  BackwardDecomposition d;
  d.leaf = leaf;
  d.t = snapshot.time;
  d.x1 = it->position;

  std::vector<double> pos(arena.size(), std::nan(""));
  for (const auto& a : snapshot.atoms) {
    if (!arena.contains(a.node)) throw QueryError("snapshot atom not in arena");
    pos[a.node] = a.position;
  }

  const auto line = arena.lineage(leaf);
  std::vector<NodeId> stack;
  for (std::size_t k = line.size() - 1; k-- > 0;) {
    const auto& n = arena.node(line[k]);
    const NodeId on_path = line[k + 1];
    const NodeId off = n.first_child == on_path ? n.first_child + 1 : n.first_child;
    std::vector<double> rel;
    stack.assign(1, off);
    while (!stack.empty()) {
      const NodeId id = stack.back();
      stack.pop_back();
      const auto& c = arena.node(id);
      if (c.kind == EventKind::kBranch) {
        stack.push_back(c.first_child);
        stack.push_back(c.first_child + 1);
      } else if (!std::isnan(pos[id])) {
        rel.push_back(pos[id] - d.x1);
      }
    }
    d.branches.push_back({n.event_time, PointMeasure(std::move(rel))});
  }

  const auto& grid = arena.grid();
  const auto path = grid_path(arena, leaf);
  d.s.push_back(0.0);
  d.y.push_back(0.0);
  for (std::size_t i = path.size(); i-- > 0;) {
    const double s = d.t - grid[i];
    if (s <= 0.0) continue;
    d.s.push_back(s);
    d.y.push_back(path[i] - d.x1);
  }
  return d;
}

PointMeasure decoration_window(const BackwardDecomposition& d, double zeta) {
  if (!(zeta >= 0.0) || zeta > d.t) throw ConfigError("decoration window needs 0 <= zeta <= t");
  PointMeasure q({0.0});
  for (const auto& b : d.branches) {
    if (b.tau > d.t - zeta) q.add_all(b.siblings);
  }
  return q;
}

double pair_branch_time(const LineageArena& arena, NodeId i, NodeId j) {
  if (!arena.contains(i) || !arena.contains(j)) {
    throw QueryError("pair_branch_time: node ids do not belong to this arena");
  }
  // Children always carry larger ids than their parents.
  while (i != j) {
    if (i > j) i = arena.node(i).parent;
    else j = arena.node(j).parent;
    if (i == kNoNode || j == kNoNode) throw QueryError("pair_branch_time: no common ancestor");
  }
  return arena.node(i).event_time;
}

PathEventReport check_path_events(const LineageArena& arena, const PopulationSnapshot& snapshot,
                                  double m_t, double x, double eta, double max_gap) {
  PathEventReport r;
  r.t = snapshot.time;
  r.x = x;
  r.eta = eta;
  r.m_t = m_t;
  const double t = snapshot.time;
  const auto& grid = arena.grid();
  // Resolution over [0, t].
  if (grid.empty() || grid.front() > 0.0 || grid.back() < t) {
    throw QueryError("checkpoint grid must cover [0, t]; required resolution " +
                     std::to_string(max_gap));
  }
  double gap = 0.0;
  for (std::size_t i = 1; i < grid.size() && grid[i - 1] < t; ++i) {
    gap = std::max(gap, grid[i] - grid[i - 1]);
  }
  r.resolution = gap;
  if (gap > max_gap * (1.0 + 1e-9)) {
    throw QueryError("checkpoint grid gap " + std::to_string(gap) + " exceeds required resolution " +
                     std::to_string(max_gap));
  }
  for (const auto& a : snapshot.atoms) {
    if (!(std::abs(a.position - m_t) < eta)) continue;
    ++r.checked;
    const auto path = grid_path(arena, a.node);
    for (std::size_t k = 0; k < path.size(); ++k) {
      const double s = grid[k];
      const double v = path[k];
      if (v < -x) r.e1 = false;
      if (s >= t / 2 && v < m_t - x) r.e1 = false;
      if (s >= x && s <= t / 2 && v < std::cbrt(s)) r.e2 = false;
      const double back = t - s;  // E3 uses s' = t - s in [x, t/2]
      if (back >= x && back <= t / 2) {
        const double rel = v - a.position;
        if (rel < std::cbrt(back) || rel > std::pow(back, 2.0 / 3.0)) r.e3 = false;
      }
    }
  }
  r.a = r.e1 && r.e2 && r.e3;
  return r;
}

}  // namespace bbm
