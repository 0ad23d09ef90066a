#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "bbm/rng.hpp"

namespace bbm {

struct ModelParams {
  double lambda = 1.0;
  double rho = 2.0;
  double sigma = 1.4142135623730951;

  // Throws ConfigError unless all positive. Criticality (rho = lambda + sigma^2/2
  // and rho = sigma^2) is reported by is_critical, not enforced.
  void validate() const;
  bool is_critical(double tol = 1e-12) const;
};

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class EventKind : std::uint8_t { kBranch, kHorizon, kAbsorbed, kPruned };

struct LineageNode {
  NodeId id = kNoNode;
  NodeId parent = kNoNode;
  NodeId first_child = kNoNode;  // branch children are first_child and first_child + 1
  double birth_time = 0.0;
  double birth_pos = 0.0;
  double event_time = 0.0;
  double event_pos = 0.0;
  EventKind kind = EventKind::kHorizon;
};

class LineageArena {
 public:
  const std::vector<LineageNode>& nodes() const { return nodes_; }
  const std::vector<double>& grid() const { return grid_; }
  std::size_t size() const { return nodes_.size(); }
  bool contains(NodeId id) const { return id < nodes_.size(); }
  const LineageNode& node(NodeId id) const;

  // Checkpoint positions of a node as (grid index, position) pairs, increasing.
  struct Checkpoint {
    std::uint32_t grid_index;
    double position;
  };
  std::span<const Checkpoint> checkpoints(NodeId id) const;

  // X_{i,t}(s) for the lineage of leaf. Exact at event times on the lineage,
  // recorded sample at checkpoint times; anything else is a QueryError.
  double ancestral_position(NodeId leaf, double s) const;

  // Lineage from root to leaf (inclusive), root first.
  std::vector<NodeId> lineage(NodeId leaf) const;

  // Builders used by the engine and by test fixtures.
  void set_grid(std::vector<double> grid);
  NodeId add_node(LineageNode n);
  LineageNode& mutable_node(NodeId id) { return nodes_.at(id); }
  void add_checkpoint(NodeId id, std::uint32_t grid_index, double pos);
  void finalize();  // sorts checkpoint records into per-node order
  void reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  struct RawCheckpoint {
    NodeId node;
    std::uint32_t grid_index;
    double position;
  };
  std::vector<LineageNode> nodes_;
  std::vector<double> grid_;
  std::vector<RawCheckpoint> raw_;
  std::vector<Checkpoint> cp_;
  std::vector<std::uint32_t> cp_offset_;
  bool finalized_ = false;
};

struct Atom {
  double position;
  NodeId node;
};

struct PopulationSnapshot {
  double time = 0.0;
  std::vector<Atom> atoms;  // sorted by position
  bool pruned = false;
  // Exact martingale mass carried by pruned particles at their pruning time:
  // sum of e^{-x} and of x e^{-x}. Both are conditional means of their
  // descendants' contributions at any later time.
  double pruned_m = 0.0;
  double pruned_z = 0.0;

  std::size_t size() const { return atoms.size(); }
  double leftmost() const;
};

struct PruneConfig {
  bool enabled = false;
  double window = 10.0;
  std::uint64_t cap = 50'000'000;
};

struct HitRecord {
  NodeId node;
  double time;
};

struct SimConfig {
  ModelParams params;
  double horizon = 0.0;  // may be +inf when an absorption level is set
  std::uint64_t seed = 0;
  PruneConfig prune;
  std::vector<double> checkpoints;
  double start_position = 0.0;
  double start_time = 0.0;  // time coordinate of the root's birth
  std::optional<double> absorb_level;
  // Levels whose first passage per line of descent is recorded without
  // stopping the lineage (at most 8, all below the absorption level).
  std::vector<double> passage_levels;
  bool branching = true;
  bool record_arena = true;
  // Live positions are synchronised at multiples of this step; pruning uses
  // the minimum at the latest synchronisation time as reference.
  double sync_step = 0.25;
  // Offset added to the node id when deriving random streams; lets a caller
  // run independent sub-simulations under one seed.
  std::uint64_t stream_offset = 0;
};

struct SimResult {
  PopulationSnapshot snapshot;
  LineageArena arena;
  std::vector<HitRecord> absorbed;
  std::vector<std::vector<HitRecord>> passages;  // one list per passage level
  std::uint64_t events = 0;
  std::uint64_t max_live = 0;
  std::uint64_t pruned_count = 0;
};

// Core event-driven simulator.
SimResult run(const SimConfig& config);

// Convenience form: snapshot at horizon t with genealogy on the given grid.
SimResult simulate(const ModelParams& params, double t, std::uint64_t seed,
                   const PruneConfig& prune, const std::vector<double>& checkpoints);

struct StoppingLineResult {
  double level = 0.0;
  std::vector<HitRecord> hits;
  std::uint64_t count = 0;
  double z = 0.0;  // k e^{-k} H_k
};

StoppingLineResult stopping_line(const ModelParams& params, double k, std::uint64_t seed,
                                 std::uint64_t cap, double start_position = 0.0,
                                 std::uint64_t stream_offset = 0);

// Exact first passage helpers shared with the Gamma sampler.
// Probability that a Brownian bridge from a to b over duration h with
// variance rate var crosses level l (l above both endpoints).
double bridge_cross_probability(double a, double b, double l, double h, double var);

// Given that the bridge from (0,a) to (h,b) crosses l > max(a,b), sample the
// first passage time in (0,h).
double bridge_first_passage(double a, double b, double l, double h, double var, Stream& rng);

}  // namespace bbm
