#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bbm/config.hpp"
#include "bbm/decoration.hpp"
#include "bbm/engine.hpp"
#include "bbm/errors.hpp"
#include "bbm/fkpp.hpp"
#include "bbm/frontstats.hpp"
#include "bbm/io.hpp"
#include "bbm/suites.hpp"

namespace {

using namespace bbm;
using nlohmann::json;

enum Exit : int { kPass = 0, kVerifyFailed = 1, kConfigError = 2, kResourceError = 3 };

// Flag values are kept as strings and copied into the RunConfig only when
// the flag was given, so file values survive unless overridden.
class Overrides {
 public:
  void bind(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto* opt = app->add_option(flag, values_[key], help);
    bound_.emplace_back(opt, key);
  }
  void apply(RunConfig& c) const {
    for (const auto& [opt, key] : bound_) {
      if (opt->count() > 0) c.set(key, values_.at(key));
    }
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::pair<CLI::Option*, std::string>> bound_;
};

// Time series of FrontRecords from the checkpoint grid; the last row uses the
// final snapshot so pruned mass is included there.
std::vector<FrontRecord> front_series(const SimResult& r, double c_b) {
  std::vector<FrontRecord> out;
  const auto& grid = r.arena.grid();
  if (r.arena.size() > 0 && grid.size() > 1) {
    std::vector<PopulationSnapshot> at(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) at[g].time = grid[g];
    for (const auto& n : r.arena.nodes()) {
      for (const auto& cp : r.arena.checkpoints(n.id)) at[cp.grid_index].atoms.push_back({cp.position, n.id});
    }
    for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
      auto& s = at[g];
      if (s.atoms.empty() || grid[g] <= 0.0) continue;
      std::ranges::sort(s.atoms, {}, &Atom::position);
      s.pruned = r.snapshot.pruned;
      out.push_back(front_record(s, c_b));
    }
  }
  out.push_back(front_record(r.snapshot, c_b));
  return out;
}

int cmd_simulate(const RunConfig& cfg) {
  OutputDir dir(cfg.get("output.dir"), cfg);
  SimConfig c;
  c.params = cfg.model();
  c.horizon = cfg.horizon();
  c.seed = cfg.seed();
  c.prune = cfg.prune();
  c.checkpoints = cfg.checkpoints();
  c.record_arena = cfg.flag("sim.record_arena");
  const auto r = run(c);
  if (c.record_arena) {
    auto out = dir.open_raw("arena.jsonl");
    write_arena(out, r.arena, cfg);
  }
  {
    auto out = dir.open_csv("snapshot.csv");
    write_snapshot_csv(out, r.snapshot);
  }
  {
    auto out = dir.open_csv("front.csv");
    write_front_csv(out, front_series(r, cfg.number("front.c_b")));
  }
  std::cout << "simulate: t=" << format_double(c.horizon) << " particles=" << r.snapshot.size()
            << " leftmost=" << format_double(r.snapshot.leftmost()) << " events=" << r.events
            << " pruned=" << r.pruned_count << "\n";
  return kPass;
}

int cmd_fkpp(const RunConfig& cfg) {
  OutputDir dir(cfg.get("output.dir"), cfg);
  const auto table = solve_fkpp(cfg.fkpp());
  const double lo = cfg.number("fkpp.fit_lo");
  const double hi = std::min(cfg.number("fkpp.fit_hi"), table.horizon());
  const auto centre = fit_centering(table, lo, hi);
  const auto wave = wave_profile(table, table.horizon());
  const auto tail = tail_constant(wave);
  {
    auto out = dir.open_csv("fkpp_medians.csv");
    write_medians_csv(out, table);
  }
  {
    auto out = dir.open_csv("wave.csv");
    write_wave_csv(out, wave);
  }
  dir.write_json("fkpp_report.json",
                 {{"horizon", table.horizon()},
                  {"median_at_horizon", table.median_at(table.horizon())},
                  {"centering", {{"c_b", centre.c_b}, {"slope", centre.slope}, {"residual", centre.residual},
                                 {"t_min", centre.t_min}, {"t_max", centre.t_max}}},
                  {"tail", {{"c", tail.c}, {"residual", tail.residual}, {"variation", tail.variation},
                            {"affine_c", tail.affine_c}, {"affine_d", tail.affine_d},
                            {"affine_residual", tail.affine_residual}, {"flagged", tail.flagged},
                            {"lo", tail.lo}, {"hi", tail.hi}}},
                  {"stretching_c", table.stretching_c()},
                  {"max_clip", table.max_clip()}});
  std::cout << "fkpp: C_B=" << format_double(centre.c_b) << " (residual " << format_double(centre.residual)
            << ") C=" << format_double(tail.c) << " (residual " << format_double(tail.residual)
            << ", affine C=" << format_double(tail.affine_c) << ")\n";
  return kPass;
}

void write_atoms(std::ostream& out, std::size_t draw, double weight, const std::vector<double>& atoms) {
  for (double a : atoms) out << draw << ',' << format_double(weight) << ',' << format_double(a) << '\n';
}

int cmd_sample(const RunConfig& cfg) {
  OutputDir dir(cfg.get("output.dir"), cfg);
  const auto variant = cfg.get("sample.variant");
  const auto n = cfg.count("sample.n");
  const auto seed = cfg.seed();
  if (n == 0) throw ConfigError("sample.n must be positive");

  if (variant == "gamma") {
    const double b = cfg.number("sample.b"), dt = cfg.number("sample.dt"), h = cfg.number("sample.horizon");
    if (!(b > 0.0) || !(dt > 0.0) || !(h > dt)) throw ConfigError("gamma needs b > 0 and 0 < dt < horizon");
    auto summary = dir.open_csv("gamma.csv");
    summary << "path,b,t_b,completed,grid_max\n";
    auto paths = dir.open_csv("gamma_paths.csv");
    paths << "path,t,value\n";
    for (std::size_t i = 0; i < n; ++i) {
      const auto g = sample_gamma(b, dt, h, seed + i);
      summary << i << ',' << format_double(b) << ',' << format_double(g.t_b) << ',' << (g.completed ? 1 : 0)
              << ',' << format_double(*std::ranges::max_element(g.values)) << '\n';
      const std::size_t stride = std::max<std::size_t>(1, g.values.size() / 1000);
      for (std::size_t k = 0; k < g.values.size(); k += stride) {
        paths << i << ',' << format_double(g.time(k)) << ',' << format_double(g.values[k]) << '\n';
      }
    }
    std::cout << "sample: " << n << " gamma paths with b=" << format_double(b) << "\n";
    return kPass;
  }

  const std::vector<std::string> weighted{"Y", "Q", "L", "Lprime"};
  if (std::ranges::find(weighted, variant) == weighted.end()) {
    throw ConfigError("unknown sample variant '" + variant + "' (gamma, Y, Q, L, Lprime)");
  }
  // The weighted variants need G along the backbone; the table is built here.
  const auto table = solve_fkpp(cfg.fkpp());
  YConfig ycfg;
  if (table.horizon() < ycfg.horizon) {
    throw ConfigError("fkpp.horizon must reach the backbone horizon " + format_double(ycfg.horizon));
  }
  DecorationConfig dcfg;
  const std::size_t ny = variant == "L" || variant == "Lprime" ? cfg.count("sample.pool") : n;
  const auto ys = sample_Y(table, ycfg, ny, seed);

  if (variant == "Y") {
    auto out = dir.open_csv("y.csv");
    out << "draw,b,t_b,path_weight,proposal_density,iw,remainder\n";
    for (std::size_t i = 0; i < ys.draws.size(); ++i) {
      const auto& d = ys.draws[i];
      out << i << ',' << format_double(d.b) << ',' << format_double(d.path.t_b) << ','
          << format_double(d.path_weight) << ',' << format_double(d.proposal_density) << ','
          << format_double(d.iw) << ',' << format_double(d.remainder) << '\n';
    }
    std::cout << "sample: " << ys.draws.size() << " backbones, c1=" << format_double(ys.c1.mean) << " ess="
              << format_double(ys.ess) << "\n";
    return kPass;
  }

  std::vector<DecorationSample> decorations;
  decorations.reserve(ys.draws.size());
  for (std::size_t i = 0; i < ys.draws.size(); ++i) {
    decorations.push_back(sample_decoration(ys.draws[i], dcfg, seed + 1'000'000 + i));
  }
  if (variant == "Q") {
    auto out = dir.open_csv("q.csv");
    out << "draw,weight,atom\n";
    for (std::size_t i = 0; i < decorations.size(); ++i) {
      write_atoms(out, i, decorations[i].weight, decorations[i].q.atoms());
    }
    std::cout << "sample: " << decorations.size() << " weighted decorations\n";
    return kPass;
  }

  const Interval window{cfg.number("sample.window_lo"), cfg.number("sample.window_hi")};
  if (!(window.lo < window.hi)) throw ConfigError("sample window must have lo < hi");
  const auto pool = resample_pool(decorations, decorations.size(), seed + 2'000'000);
  const auto kind = variant == "L" ? LimitVariant::kL : LimitVariant::kLPrime;
  auto out = dir.open_csv(variant == "L" ? "l.csv" : "lprime.csv");
  out << "draw,weight,atom\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = sample_L(window, pool, dcfg.q_max, seed + 3'000'000 + i, kind);
    write_atoms(out, i, s.weight, s.window.atoms());
  }
  std::cout << "sample: " << n << " draws of " << variant << " on [" << format_double(window.lo) << ", "
            << format_double(window.hi) << "]\n";
  return kPass;
}

int cmd_verify(const RunConfig& cfg, double scale) {
  const auto ids = suite_criteria(cfg.get("verify.suite"));
  OutputDir dir(cfg.get("output.dir"), cfg);
  SuiteRunner runner({cfg.seed(), scale});
  json summary = json::array();
  bool all = true;
  for (int id : ids) {
    const auto o = runner.run(id);
    std::cout << outcome_line(o) << std::endl;
    write_report(dir, o.report);
    summary.push_back({{"criterion", id}, {"title", criterion_title(id)}, {"experiment", o.report.name},
                       {"pass", o.passed()}, {"seconds", o.seconds}, {"error", o.error}});
    all = all && o.passed();
  }
  dir.write_json("summary.json", {{"suite", cfg.get("verify.suite")}, {"scale", scale}, {"criteria", summary},
                                  {"pass", all}});
  return all ? kPass : kVerifyFailed;
}

// Prints one line per report JSON found in the output directory.
int cmd_report(const RunConfig& cfg) {
  const std::filesystem::path dir = cfg.get("output.dir");
  if (!std::filesystem::is_directory(dir)) throw IoError("output directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::ranges::sort(files);
  bool all = true;
  std::size_t shown = 0;
  for (const auto& f : files) {
    std::ifstream in(f);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw IoError("cannot parse " + f.string() + ": " + e.what());
    }
    if (!j.contains("verdicts")) continue;
    ++shown;
    const bool pass = j.value("pass", false);
    all = all && pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << j.value("experiment", f.stem().string()) << "\n";
    for (const auto& v : j["verdicts"]) {
      const char* mark = v.value("pass", false) ? "ok   " : v.value("gating", true) ? "FAIL " : "diag ";
      std::cout << "    " << mark << v.value("name", "") << ": "
                << v.value("rule", "") << "\n";
    }
  }
  if (shown == 0) throw IoError("no reports in " + dir.string());
  return all ? kPass : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{version_string() + ": branching Brownian motion toolkit"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  std::vector<std::string> assignments;
  app.add_option("-c,--config", config_file, "key = value configuration file");
  app.add_option("--set", assignments, "override as key=value (repeatable)");
  Overrides ov;
  ov.bind(&app, "--seed", "seed", "master seed");
  ov.bind(&app, "-o,--out", "output.dir", "existing output directory");

  auto* sim = app.add_subcommand("simulate", "run one BBM and write arena, snapshot and front records");
  ov.bind(sim, "--t", "sim.t", "horizon");
  ov.bind(sim, "--prune-delta", "prune.delta", "pruning window (enables pruning)");
  ov.bind(sim, "--cap", "prune.cap", "live particle cap");
  ov.bind(sim, "--checkpoint-step", "sim.checkpoint_step", "genealogy grid spacing, 0 for none");

  auto* fk = app.add_subcommand("fkpp", "solve the F-KPP equation and fit the front constants");
  ov.bind(fk, "--dx", "fkpp.dx", "space step");
  ov.bind(fk, "--dt", "fkpp.dt", "time step");
  ov.bind(fk, "--horizon", "fkpp.horizon", "final time");
  ov.bind(fk, "--half-width", "fkpp.half_width", "half width of the moving window");
  ov.bind(fk, "--scheme", "fkpp.scheme", "semi-implicit or explicit");

  auto* smp = app.add_subcommand("sample", "draw from gamma, Y, Q, L or Lprime");
  ov.bind(smp, "--variant", "sample.variant", "gamma, Y, Q, L or Lprime");
  ov.bind(smp, "--n", "sample.n", "number of draws");
  ov.bind(smp, "--b", "sample.b", "gamma level");
  std::vector<std::string> window;
  smp->add_option("--window", window, "window lo hi for L and Lprime")->expected(2)->allow_extra_args(false);

  auto* ver = app.add_subcommand("verify", "run acceptance experiments and write reports");
  ov.bind(ver, "--suite", "verify.suite", "identities, pde, sampler, limits, properties or all");
  double scale = 1.0;
  ver->add_option("--scale", scale, "multiplier on replica counts (smoke runs use < 1)");

  auto* rep = app.add_subcommand("report", "summarise report files in the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kPass : kConfigError;
  }

  try {
    RunConfig cfg = config_file.empty() ? RunConfig{} : RunConfig::load(config_file);
    for (const auto& a : assignments) {
      const auto eq = a.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + a);
      cfg.set(a.substr(0, eq), a.substr(eq + 1));
    }
    ov.apply(cfg);
    if (sim->parsed() && sim->get_option("--prune-delta")->count() > 0) cfg.set("prune.enabled", "true");
    if (window.size() == 2) {
      cfg.set("sample.window_lo", window[0]);
      cfg.set("sample.window_hi", window[1]);
    }

    if (sim->parsed()) return cmd_simulate(cfg);
    if (fk->parsed()) return cmd_fkpp(cfg);
    if (smp->parsed()) return cmd_sample(cfg);
    if (ver->parsed()) return cmd_verify(cfg, scale);
    if (rep->parsed()) return cmd_report(cfg);
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return kResourceError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kVerifyFailed;
  }
  return kPass;
}
