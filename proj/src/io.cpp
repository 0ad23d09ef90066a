#include "bbm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include "bbm/errors.hpp"

namespace bbm {

using nlohmann::json;

std::string version_string() { return std::string("bbm ") + BBM_VERSION; }

std::string format_double(double x) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw NumericError("format_double failed");
  return {buf, p};
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw IoError("malformed number '" + std::string(s) + "'");
  }
  return v;
}

OutputDir::OutputDir(std::filesystem::path dir, RunConfig config)
    : dir_(std::move(dir)), config_(std::move(config)) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir_, ec)) {
    throw IoError("output directory " + dir_.string() + " does not exist");
  }
}

std::ofstream OutputDir::open_raw(const std::string& name) const {
  std::ofstream out(dir_ / name, std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir_ / name).string());
  return out;
}

std::ofstream OutputDir::open_csv(const std::string& name) const {
  auto out = open_raw(name);
  write_csv_preamble(out, config_);
  return out;
}

void OutputDir::write_json(const std::string& name, json body) const {
  body["version"] = version_string();
  body["run_config"] = config_.to_json();
  auto out = open_raw(name);
  out << body.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + (dir_ / name).string());
}

void write_csv_preamble(std::ostream& out, const RunConfig& config) {
  out << "# " << version_string() << '\n';
  for (const auto& [k, v] : config.values()) out << "# " << k << " = " << v << '\n';
}

namespace {

const char* kind_name(EventKind k) {
  switch (k) {
    case EventKind::kBranch: return "branch";
    case EventKind::kHorizon: return "horizon";
    case EventKind::kAbsorbed: return "absorbed";
    case EventKind::kPruned: return "pruned";
  }
  return "?";
}

EventKind kind_from(const std::string& s) {
  for (auto k : {EventKind::kBranch, EventKind::kHorizon, EventKind::kAbsorbed, EventKind::kPruned}) {
    if (s == kind_name(k)) return k;
  }
  throw IoError("unknown event kind '" + s + "'");
}

json id_json(NodeId id) { return id == kNoNode ? json(nullptr) : json(id); }
NodeId id_from(const json& j) { return j.is_null() ? kNoNode : j.get<NodeId>(); }

}  // namespace

void write_arena(std::ostream& out, const LineageArena& arena, const RunConfig& config) {
  out << json{{"version", version_string()}, {"run_config", config.to_json()}, {"grid", arena.grid()},
              {"nodes", arena.size()}}
             .dump()
      << '\n';
  for (const auto& n : arena.nodes()) {
    json cps = json::array();
    for (const auto& c : arena.checkpoints(n.id)) cps.push_back({c.grid_index, c.position});
    out << json{{"id", n.id},
                {"parent", id_json(n.parent)},
                {"first_child", id_json(n.first_child)},
                {"birth_time", n.birth_time},
                {"birth_pos", n.birth_pos},
                {"event_time", n.event_time},
                {"event_pos", n.event_pos},
                {"kind", kind_name(n.kind)},
                {"checkpoints", cps}}
               .dump()
        << '\n';
  }
}

LineageArena read_arena(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty arena stream");
  LineageArena a;
  try {
    const auto head = json::parse(line);
    a.set_grid(head.at("grid").get<std::vector<double>>());
    const auto n = head.at("nodes").get<std::size_t>();
    a.reserve(n);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = json::parse(line);
      LineageNode node;
      node.parent = id_from(j.at("parent"));
      node.first_child = id_from(j.at("first_child"));
      node.birth_time = j.at("birth_time").get<double>();
      node.birth_pos = j.at("birth_pos").get<double>();
      node.event_time = j.at("event_time").get<double>();
      node.event_pos = j.at("event_pos").get<double>();
      node.kind = kind_from(j.at("kind").get<std::string>());
      const NodeId id = a.add_node(node);
      if (id != j.at("id").get<NodeId>()) throw IoError("arena records out of order");
      for (const auto& c : j.at("checkpoints")) {
        a.add_checkpoint(id, c.at(0).get<std::uint32_t>(), c.at(1).get<double>());
      }
    }
    if (a.size() != n) throw IoError("arena has " + std::to_string(a.size()) + " records, header says " +
                                     std::to_string(n));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed arena record: ") + e.what());
  }
  a.finalize();
  return a;
}

void write_snapshot_csv(std::ostream& out, const PopulationSnapshot& s) {
  out << "# time = " << format_double(s.time) << "\n# pruned = " << (s.pruned ? "true" : "false")
      << "\n# pruned_m = " << format_double(s.pruned_m) << "\n# pruned_z = " << format_double(s.pruned_z)
      << "\nposition,node\n";
  for (const auto& a : s.atoms) out << format_double(a.position) << ',' << a.node << '\n';
}

void write_front_csv(std::ostream& out, std::span<const FrontRecord> records) {
  out << "t,n,x1,m,z,m_t,pruned\n";
  for (const auto& r : records) {
    out << format_double(r.t) << ',' << r.n << ',' << format_double(r.x1) << ',' << format_double(r.m)
        << ',' << format_double(r.z) << ',' << format_double(r.m_t) << ',' << (r.pruned ? 1 : 0) << '\n';
  }
}

void write_medians_csv(std::ostream& out, const FkppTable& table) {
  out << "t,median,median_minus_log_term\n";
  for (const auto& s : table.slices()) {
    if (s.t <= 0.0 || std::isnan(s.median)) continue;
    out << format_double(s.t) << ',' << format_double(s.median) << ','
        << format_double(s.median - 1.5 * std::log(s.t)) << '\n';
  }
}

void write_wave_csv(std::ostream& out, const WaveProfile& w) {
  out << "x,w\n";
  for (std::size_t i = 0; i < w.w.size(); ++i) {
    out << format_double(w.x_lo + static_cast<double>(i) * w.dx) << ',' << format_double(w.w[i]) << '\n';
  }
}

void write_report(const OutputDir& dir, const ExperimentReport& report) {
  dir.write_json(report.name + ".json", report.to_json());
  if (report.raw.empty()) return;
  auto out = dir.open_csv(report.name + "_raw.csv");
  std::size_t rows = 0;
  bool first = true;
  for (const auto& [k, v] : report.raw) {
    out << (first ? "" : ",") << k;
    first = false;
    rows = std::max(rows, v.size());
  }
  out << '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    first = true;
    for (const auto& [k, v] : report.raw) {
      if (!first) out << ',';
      if (i < v.size()) out << format_double(v[i]);
      first = false;
    }
    out << '\n';
  }
}

}  // namespace bbm
