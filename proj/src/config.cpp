#include "bbm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bbm/errors.hpp"

namespace bbm {
namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d{
      {"seed", "1"},
      {"model.lambda", "1"},
      {"model.rho", "2"},
      {"model.sigma", "1.4142135623730951"},
      {"sim.t", "5"},
      {"sim.checkpoint_step", "0.5"},  // 0 disables the genealogy grid
      {"sim.record_arena", "true"},
      {"prune.enabled", "false"},
      {"prune.delta", "10"},
      {"prune.cap", "50000000"},
      // m_t offset for FrontRecord output; `bbm fkpp` fit over t in [40, 400].
      {"front.c_b", "2.0"},
      {"fkpp.dx", "0.02"},
      {"fkpp.dt", "0.01"},
      {"fkpp.half_width", "60"},
      {"fkpp.horizon", "30"},
      {"fkpp.scheme", "semi-implicit"},
      {"fkpp.dense_until", "1"},
      {"fkpp.store_every", "0.05"},
      {"fkpp.fit_lo", "10"},  // centering fit window
      {"fkpp.fit_hi", "30"},
      {"sample.variant", "gamma"},
      {"sample.n", "100"},
      {"sample.b", "1"},
      {"sample.dt", "0.001"},
      {"sample.horizon", "30"},
      {"sample.window_lo", "-2"},
      {"sample.window_hi", "2"},
      {"sample.pool", "500"},
      {"verify.suite", "all"},
      {"output.dir", "out"},
  };
  return d;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto a = s.find_first_not_of(ws);
  if (a == std::string_view::npos) return {};
  return s.substr(a, s.find_last_not_of(ws) - a + 1);
}

}  // namespace

RunConfig::RunConfig() : values_(defaults()) {}

bool RunConfig::known(const std::string& key) { return defaults().contains(key); }

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    c.set(std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))));
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read config file " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::set(const std::string& key, std::string value) {
  if (!known(key)) throw ConfigError("unknown config key '" + key + "'");
  const auto t = trim(value);
  if (t.empty()) throw ConfigError("empty value for '" + key + "'");
  if (t.find('\n') != std::string_view::npos) throw ConfigError("newline in value for '" + key + "'");
  values_[key] = std::string(t);
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::number(const std::string& key) const {
  const auto& s = get(key);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("'" + key + "' is not a finite number: " + s);
  }
  return v;
}

std::uint64_t RunConfig::count(const std::string& key) const {
  std::string s = get(key);
  std::erase(s, '_');  // 10_000_000
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ConfigError("'" + key + "' is not a nonnegative integer: " + get(key));
  }
  return v;
}

bool RunConfig::flag(const std::string& key) const {
  const auto& s = get(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("'" + key + "' is not a boolean: " + s);
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

std::uint64_t RunConfig::seed() const { return count("seed"); }

ModelParams RunConfig::model() const {
  ModelParams p{number("model.lambda"), number("model.rho"), number("model.sigma")};
  p.validate();
  return p;
}

PruneConfig RunConfig::prune() const {
  PruneConfig p{flag("prune.enabled"), number("prune.delta"), count("prune.cap")};
  if (p.window <= 0.0) throw ConfigError("prune.delta must be positive");
  if (p.cap == 0) throw ConfigError("prune.cap must be positive");
  return p;
}

FkppSpec RunConfig::fkpp() const {
  FkppSpec s;
  s.dx = number("fkpp.dx");
  s.dt = number("fkpp.dt");
  s.half_width = number("fkpp.half_width");
  s.horizon = number("fkpp.horizon");
  s.dense_until = number("fkpp.dense_until");
  s.store_every = number("fkpp.store_every");
  const auto& scheme = get("fkpp.scheme");
  if (scheme == scheme_name(Scheme::kSemiImplicit)) {
    s.scheme = Scheme::kSemiImplicit;
  } else if (scheme == scheme_name(Scheme::kExplicit)) {
    s.scheme = Scheme::kExplicit;
  } else {
    throw ConfigError("fkpp.scheme must be semi-implicit or explicit, got " + scheme);
  }
  return s;
}

double RunConfig::horizon() const {
  const double t = number("sim.t");
  if (!(t > 0.0)) throw ConfigError("sim.t must be positive");
  return t;
}

std::vector<double> RunConfig::checkpoints() const {
  const double h = number("sim.checkpoint_step");
  if (h < 0.0) throw ConfigError("sim.checkpoint_step must be nonnegative");
  std::vector<double> g;
  if (h == 0.0) return g;
  const double t = horizon();
  const auto n = static_cast<std::size_t>(std::floor(t / h + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) g.push_back(static_cast<double>(i) * h);
  if (t - g.back() > 1e-9 * t) g.push_back(t);
  return g;
}

}  // namespace bbm
