#include "bbm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bbm/errors.hpp"

namespace bbm {

void ModelParams::validate() const {
  if (!(lambda > 0.0) || !(rho > 0.0) || !(sigma > 0.0) || !std::isfinite(lambda) ||
      !std::isfinite(rho) || !std::isfinite(sigma)) {
    throw ConfigError("model parameters must be finite and strictly positive");
  }
}

bool ModelParams::is_critical(double tol) const {
  const double s2 = sigma * sigma;
  return std::abs(rho - (lambda + s2 / 2.0)) <= tol && std::abs(rho - s2) <= tol;
}

// ---------------------------------------------------------------- arena

const LineageNode& LineageArena::node(NodeId id) const {
  if (id >= nodes_.size()) throw QueryError("node id " + std::to_string(id) + " not in arena");
  return nodes_[id];
}

void LineageArena::set_grid(std::vector<double> grid) {
  if (!std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw ConfigError("checkpoint grid must be strictly increasing");
  }
  grid_ = std::move(grid);
}

NodeId LineageArena::add_node(LineageNode n) {
  n.id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(n);
  finalized_ = false;
  return n.id;
}

void LineageArena::add_checkpoint(NodeId id, std::uint32_t grid_index, double pos) {
  raw_.push_back({id, grid_index, pos});
  finalized_ = false;
}

void LineageArena::finalize() {
  std::stable_sort(raw_.begin(), raw_.end(), [](const RawCheckpoint& a, const RawCheckpoint& b) {
    return a.node != b.node ? a.node < b.node : a.grid_index < b.grid_index;
  });
  cp_offset_.assign(nodes_.size() + 1, 0);
  for (const auto& r : raw_) ++cp_offset_[r.node + 1];
  for (std::size_t i = 1; i < cp_offset_.size(); ++i) cp_offset_[i] += cp_offset_[i - 1];
  cp_.clear();
  cp_.reserve(raw_.size());
  for (const auto& r : raw_) cp_.push_back({r.grid_index, r.position});
  raw_.clear();
  raw_.shrink_to_fit();
  finalized_ = true;
}

std::span<const LineageArena::Checkpoint> LineageArena::checkpoints(NodeId id) const {
  if (!finalized_) throw QueryError("arena not finalized");
  if (id >= nodes_.size()) throw QueryError("node id " + std::to_string(id) + " not in arena");
  return {cp_.data() + cp_offset_[id], cp_.data() + cp_offset_[id + 1]};
}

std::vector<NodeId> LineageArena::lineage(NodeId leaf) const {
  std::vector<NodeId> out;
  for (NodeId id = leaf; id != kNoNode; id = node(id).parent) out.push_back(id);
  std::reverse(out.begin(), out.end());
  return out;
}

double LineageArena::ancestral_position(NodeId leaf, double s) const {
  const LineageNode* n = &node(leaf);
  if (s > n->event_time) throw QueryError("time after the leaf's event time");
  while (n->parent != kNoNode && s <= n->birth_time) {
    if (s == n->birth_time) return n->birth_pos;
    n = &nodes_[n->parent];
  }
  if (s == n->event_time) return n->event_pos;
  if (s == n->birth_time) return n->birth_pos;
  auto it = std::lower_bound(grid_.begin(), grid_.end(), s);
  if (it == grid_.end() || *it != s) {
    throw QueryError("time " + std::to_string(s) + " is not on the recorded grid");
  }
  const auto gi = static_cast<std::uint32_t>(it - grid_.begin());
  for (const auto& c : checkpoints(n->id)) {
    if (c.grid_index == gi) return c.position;
  }
  throw QueryError("checkpoint missing for node " + std::to_string(n->id));
}

double PopulationSnapshot::leftmost() const {
  if (atoms.empty()) throw QueryError("empty snapshot has no leftmost particle");
  return atoms.front().position;
}

// ---------------------------------------------------------------- bridges

double bridge_cross_probability(double a, double b, double l, double h, double var) {
  if (a >= l || b >= l) return 1.0;
  if (h <= 0.0) return 0.0;
  return std::exp(-2.0 * (l - a) * (l - b) / (var * h));
}

double bridge_first_passage(double a, double b, double l, double h, double var, Stream& rng) {
  double t0 = 0.0, t1 = h, x0 = a, x1 = b;
  const double tol = 1e-12 * std::max(1.0, h);
  while (t1 - t0 > tol) {
    const double len = t1 - t0;
    const double mean = 0.5 * (x0 + x1);
    const double sd = std::sqrt(var * len / 4.0);
    if (x1 >= l) {
      const double m = mean + sd * rng.normal();
      const double pl = bridge_cross_probability(x0, m, l, len / 2, var);
      if (m >= l || rng.uniform() < pl) {
        t1 = t0 + len / 2;
        x1 = m;
      } else {
        t0 += len / 2;
        x0 = m;
      }
      continue;
    }
    // Midpoint of a bridge conditioned to cross: rejection on P(cross | m).
    for (;;) {
      const double m = mean + sd * rng.normal();
      const double pl = bridge_cross_probability(x0, m, l, len / 2, var);
      const double pr = bridge_cross_probability(m, x1, l, len / 2, var);
      const double p = 1.0 - (1.0 - pl) * (1.0 - pr);
      if (rng.uniform() >= p) continue;
      if (rng.uniform() * p < pl) {
        t1 = t0 + len / 2;
        x1 = m;
      } else {
        t0 += len / 2;
        x0 = m;
      }
      break;
    }
  }
  return 0.5 * (t0 + t1);
}

// ---------------------------------------------------------------- engine

namespace {

struct Live {
  NodeId id;
  double time;
  double pos;
  double next_event;
  std::uint8_t crossed;  // bitmask over passage levels
  Stream motion;
};

class Engine {
 public:
  explicit Engine(const SimConfig& c) : c_(c) {
    c_.params.validate();
    if (!(c_.horizon >= c_.start_time) || std::isnan(c_.horizon)) {
      throw ConfigError("horizon must be at least the start time");
    }
    if (std::isinf(c_.horizon) && !c_.absorb_level) {
      throw ConfigError("an infinite horizon requires an absorption level");
    }
    if (c_.prune.enabled && !(c_.prune.window > 0.0)) {
      throw ConfigError("prune window must be positive");
    }
    if (!(c_.sync_step > 0.0)) throw ConfigError("sync step must be positive");
    if (c_.passage_levels.size() > 8) throw ConfigError("at most 8 passage levels");
    if (!std::is_sorted(c_.passage_levels.begin(), c_.passage_levels.end())) {
      throw ConfigError("passage levels must be increasing");
    }
    if (c_.absorb_level && !c_.passage_levels.empty() &&
        c_.passage_levels.back() >= *c_.absorb_level) {
      throw ConfigError("passage levels must lie below the absorption level");
    }
    for (double s : c_.checkpoints) {
      if (s < c_.start_time || s > c_.horizon) {
        throw ConfigError("checkpoint outside [start, horizon]");
      }
    }
    if (c_.record_arena) res_.arena.set_grid(c_.checkpoints);
    else if (!c_.checkpoints.empty()) throw ConfigError("checkpoints require arena recording");
    var_ = c_.params.sigma * c_.params.sigma;
    res_.passages.resize(c_.passage_levels.size());
  }

  SimResult run() {
    const NodeId root = new_node(kNoNode, c_.start_time, c_.start_position);
    Live r{root, c_.start_time, c_.start_position, 0.0, 0, make_motion(root)};
    r.next_event = c_.start_time + lifetime(root);
    // Passage levels already at or below the start count as crossed at birth.
    for (std::size_t i = 0; i < c_.passage_levels.size(); ++i) {
      if (c_.start_position >= c_.passage_levels[i]) {
        r.crossed |= static_cast<std::uint8_t>(1u << i);
        res_.passages[i].push_back({root, c_.start_time});
      }
    }
    if (c_.record_arena && !c_.checkpoints.empty() && c_.checkpoints.front() == c_.start_time) {
      res_.arena.add_checkpoint(root, 0, c_.start_position);
    }
    if (c_.absorb_level && c_.start_position >= *c_.absorb_level) {
      finish(r, c_.start_time, c_.start_position, EventKind::kAbsorbed);
      res_.absorbed.push_back({root, c_.start_time});
    } else {
      current_.push_back(std::move(r));
    }

    double a = c_.start_time;
    while (!current_.empty()) {
      double b = a + c_.sync_step;
      if (b >= c_.horizon) b = c_.horizon;
      ref_min_ = std::numeric_limits<double>::infinity();
      for (const auto& p : current_) ref_min_ = std::min(ref_min_, p.pos);
      stack_.swap(current_);
      current_.clear();
      while (!stack_.empty()) {
        Live p = std::move(stack_.back());
        stack_.pop_back();
        process(std::move(p), b);
      }
      if (b >= c_.horizon) break;
      a = b;
    }
    // current_ now holds particles sitting at the horizon.
    auto& snap = res_.snapshot;
    snap.time = c_.horizon;
    snap.atoms.reserve(horizon_.size());
    for (const auto& p : horizon_) snap.atoms.push_back({p.pos, p.id});
    std::sort(snap.atoms.begin(), snap.atoms.end(), [](const Atom& x, const Atom& y) {
      return x.position != y.position ? x.position < y.position : x.node < y.node;
    });
    if (c_.record_arena) res_.arena.finalize();
    return std::move(res_);
  }

 private:
  Stream make_motion(NodeId id) const {
    return Stream(c_.seed, stream_id(id), Purpose::kMotion);
  }
  std::uint64_t stream_id(NodeId id) const {
    return static_cast<std::uint64_t>(id) + (c_.stream_offset << 32);
  }
  double lifetime(NodeId id) const {
    if (!c_.branching) return std::numeric_limits<double>::infinity();
    Stream s(c_.seed, stream_id(id), Purpose::kLifetime);
    return s.exponential(c_.params.lambda);
  }

  NodeId new_node(NodeId parent, double t, double x) {
    if (c_.record_arena) {
      LineageNode n;
      n.parent = parent;
      n.birth_time = t;
      n.birth_pos = x;
      return res_.arena.add_node(n);
    }
    return next_id_++;
  }

  void finish(const Live& p, double t, double x, EventKind kind) {
    if (!c_.record_arena) return;
    auto& n = res_.arena.mutable_node(p.id);
    n.event_time = t;
    n.event_pos = x;
    n.kind = kind;
  }

  // Moves p from p.time to target through checkpoints; returns false when the
  // lineage was absorbed (the node is then finished).
  bool advance(Live& p, double target) {
    auto it = std::upper_bound(c_.checkpoints.begin(), c_.checkpoints.end(), p.time);
    for (;;) {
      const bool at_cp = it != c_.checkpoints.end() && *it <= target;
      const double t1 = at_cp ? *it : target;
      const double h = t1 - p.time;
      if (h > 0.0) {
        const double x0 = p.pos;
        const double x1 = x0 + c_.params.rho * h + std::sqrt(var_ * h) * p.motion.normal();
        if (!std::isfinite(x1)) {
          throw NumericError("non-finite position for node " + std::to_string(p.id));
        }
        if (!levels(p, x0, x1, h)) return false;
        p.pos = x1;
        p.time = t1;
      }
      if (!at_cp) return true;
      if (c_.record_arena) {
        res_.arena.add_checkpoint(p.id, static_cast<std::uint32_t>(it - c_.checkpoints.begin()),
                                  p.pos);
      }
      ++it;
    }
  }

  // Sequential level checks on one Gaussian step; after a first passage at
  // (tau, l) the remainder is a bridge from l to x1.
  bool levels(Live& p, double x0, double x1, double h) {
    double s0 = p.time, a = x0, len = h;
    for (std::size_t i = 0; i < c_.passage_levels.size(); ++i) {
      if (p.crossed & (1u << i)) continue;
      const double l = c_.passage_levels[i];
      double tau;
      if (!crosses(a, x1, l, len, tau, p.motion)) return true;
      p.crossed |= static_cast<std::uint8_t>(1u << i);
      res_.passages[i].push_back({p.id, s0 + tau});
      s0 += tau;
      len -= tau;
      a = l;
    }
    if (c_.absorb_level) {
      const double l = *c_.absorb_level;
      double tau;
      if (crosses(a, x1, l, len, tau, p.motion)) {
        const double th = s0 + tau;
        res_.absorbed.push_back({p.id, th});
        finish(p, th, l, EventKind::kAbsorbed);
        return false;
      }
    }
    return true;
  }

  bool crosses(double a, double b, double l, double len, double& tau, Stream& rng) const {
    if (a >= l) {
      tau = 0.0;
      return true;
    }
    if (b < l && rng.uniform() >= bridge_cross_probability(a, b, l, len, var_)) return false;
    tau = bridge_first_passage(a, b, l, len, var_, rng);
    return true;
  }

  void process(Live p, double b) {
    for (;;) {
      if (p.next_event >= b) {
        if (b >= c_.horizon) {
          if (!advance(p, c_.horizon)) return;
          finish(p, c_.horizon, p.pos, EventKind::kHorizon);
          horizon_.push_back(std::move(p));
        } else {
          // Pruning compares against the minimum at b, so positions must be current.
          if (c_.prune.enabled && !advance(p, b)) return;
          current_.push_back(std::move(p));
        }
        return;
      }
      const double te = p.next_event;
      if (!advance(p, te)) return;
      ++res_.events;
      if (c_.prune.enabled && p.pos > ref_min_ + c_.prune.window) {
        finish(p, te, p.pos, EventKind::kPruned);
        auto& snap = res_.snapshot;
        snap.pruned = true;
        const double w = std::exp(-p.pos);
        snap.pruned_m += w;
        snap.pruned_z += p.pos * w;
        ++res_.pruned_count;
        return;
      }
      finish(p, te, p.pos, EventKind::kBranch);
      const NodeId c1 = new_node(p.id, te, p.pos);
      const NodeId c2 = new_node(p.id, te, p.pos);
      if (c_.record_arena) res_.arena.mutable_node(p.id).first_child = c1;
      const std::uint64_t live = stack_.size() + current_.size() + horizon_.size() + 2;
      res_.max_live = std::max(res_.max_live, live);
      if (live > c_.prune.cap) {
        throw ResourceError("live particle count " + std::to_string(live) + " exceeds cap " +
                            std::to_string(c_.prune.cap));
      }
      Live second{c2, te, p.pos, te + lifetime(c2), p.crossed, make_motion(c2)};
      stack_.push_back(std::move(second));
      p = Live{c1, te, p.pos, te + lifetime(c1), p.crossed, make_motion(c1)};
    }
  }

  SimConfig c_;
  SimResult res_;
  double var_ = 2.0;
  double ref_min_ = 0.0;
  NodeId next_id_ = 0;
  std::vector<Live> current_, stack_, horizon_;
};

}  // namespace

SimResult run(const SimConfig& config) {
  Engine e(config);
  auto r = e.run();
  if (r.max_live == 0) r.max_live = 1;
  return r;
}

SimResult simulate(const ModelParams& params, double t, std::uint64_t seed,
                   const PruneConfig& prune, const std::vector<double>& checkpoints) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("horizon t must be finite and >= 0");
  SimConfig c;
  c.params = params;
  c.horizon = t;
  c.seed = seed;
  c.prune = prune;
  c.checkpoints = checkpoints;
  return run(c);
}

StoppingLineResult stopping_line(const ModelParams& params, double k, std::uint64_t seed,
                                 std::uint64_t cap, double start_position,
                                 std::uint64_t stream_offset) {
  if (!(k > 0.0)) throw ConfigError("stopping line level must be positive");
  SimConfig c;
  c.params = params;
  c.horizon = std::numeric_limits<double>::infinity();
  c.seed = seed;
  c.prune.cap = cap;
  c.absorb_level = k;
  c.record_arena = false;
  c.start_position = start_position;
  c.stream_offset = stream_offset;
  c.sync_step = 1.0;
  auto r = run(c);
  StoppingLineResult out;
  out.level = k;
  out.hits = std::move(r.absorbed);
  out.count = out.hits.size();
  out.z = k * std::exp(-k) * static_cast<double>(out.count);
  return out;
}

}  // namespace bbm
