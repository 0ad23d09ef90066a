#include "bbm/decoration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bbm/errors.hpp"
#include "bbm/rng.hpp"

namespace bbm {

double GammaPath::value_at(double s) const {
  if (values.empty()) throw QueryError("empty Gamma path");
  if (s <= 0.0) return values.front();
  const double pos = s / dt;
  const auto last = values.size() - 1;
  if (pos >= static_cast<double>(last)) return values.back();
  const auto i = static_cast<std::size_t>(pos);
  double t0 = time(i), t1 = time(i + 1), v0 = values[i], v1 = values[i + 1];
  if (completed && t_b > t0 && t_b < t1) {
    if (s <= t_b) {
      t1 = t_b;
      v1 = b;
    } else {
      t0 = t_b;
      v0 = b;
    }
  }
  return v0 + (s - t0) / (t1 - t0) * (v1 - v0);
}

GammaPath sample_gamma(double b, double dt, double horizon, std::uint64_t seed) {
  if (!(b > 0.0) || !(dt > 0.0) || !(horizon > 0.0)) {
    throw ConfigError("sample_gamma needs b > 0, dt > 0, horizon > 0");
  }
  GammaPath p;
  p.b = b;
  p.dt = dt;
  p.horizon = horizon;
  const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
  p.values.resize(n + 1);
  p.values[0] = 0.0;
  Stream rng(seed, 0, Purpose::kGamma);
  const double sd = std::sqrt(dt);
  double x = 0.0;
  std::size_t i = 0;
  for (; i < n; ++i) {
    const double x1 = x + sd * rng.normal();
    if (x1 >= b || rng.uniform() < bridge_cross_probability(x, x1, b, dt, 1.0)) {
      p.t_b = p.time(i) + bridge_first_passage(x, x1, b, dt, 1.0, rng);
      p.completed = true;
      break;
    }
    x = x1;
    p.values[i + 1] = x;
  }
  if (!p.completed) {
    p.t_b = INFINITY;
    return p;
  }
  // Bessel(3) phase as the norm of a 3-d Brownian motion started at 0 at T_b.
  double w[3];
  const double first = std::sqrt(p.time(i + 1) - p.t_b);
  for (double& c : w) c = first * rng.normal();
  p.values[i + 1] = b - std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
  for (std::size_t k = i + 1; k < n; ++k) {
    for (double& c : w) c += sd * rng.normal();
    p.values[k + 1] = b - std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
  }
  return p;
}

double path_integral(const GammaPath& path, const std::function<double(double, double)>& f,
                     double sigma, double v_max, std::optional<double> origin) {
  const double end = std::min(path.horizon, v_max);
  if (end <= 0.0) return 0.0;
  double sum = 0.0;
  double t_prev = 0.0;
  double f_prev = origin ? *origin : f(0.0, sigma * path.values[0]);
  auto add = [&](double t, double v) {
    const double fv = f(t, sigma * v);
    sum += 0.5 * (t - t_prev) * (f_prev + fv);
    t_prev = t;
    f_prev = fv;
  };
  const std::size_t n = path.values.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double t1 = path.time(i + 1);
    if (path.completed && path.t_b > path.time(i) && path.t_b < t1 && path.t_b < end) {
      add(path.t_b, path.b);
    }
    if (t1 >= end) {
      add(end, path.value_at(end));
      break;
    }
    add(t1, path.values[i + 1]);
  }
  return sum;
}

PathIntegral path_weight(const GammaPath& path, const FkppTable& table, double sigma,
                         double tolerance) {
  if (table.horizon() < path.horizon - 1e-9) {
    throw ConfigError("table horizon shorter than the path horizon");
  }
  PathIntegral out;
  out.integral = path_integral(
      path, [&](double v, double x) { return table.g(v, x); }, sigma, path.horizon, 0.5);
  out.weight = std::exp(-2.0 * out.integral);
  if (!path.completed) {
    out.remainder = INFINITY;
    out.flagged = true;
    return out;
  }
  // Tail bound: Gamma_v ~ b - R_H sqrt((v - T_b)/(H - T_b)), G bounded by
  // the stretching estimate around m_v = m_H + 1.5 log(v / H).
  const double h = path.horizon;
  const double r_h = path.b - path.values.back();
  const double m_h = table.median_at(h);
  const double c = table.stretching_c();
  double rem = 0.0;
  const double step = 0.25;
  for (double v = h; v < 200.0 * h; v += step) {
    const double scale = std::sqrt(std::max(v - path.t_b, 0.0) / std::max(h - path.t_b, 1e-12));
    const double x = sigma * (path.b - r_h * scale);
    const double r = x - (m_h + 1.5 * std::log(v / h));
    const double g = std::min(1.0, c * (std::abs(r) + 1.0) * std::exp(r));
    rem += step * g;
    if (g < 1e-16) break;
  }
  out.remainder = rem;
  out.flagged = rem > tolerance;
  return out;
}

YSample sample_Y(const FkppTable& table, const YConfig& cfg, std::size_t n, std::uint64_t seed,
                 bool check_ess) {
  if (!(cfg.b_max > 0.0) || cfg.pilot_bins < 1 || cfg.pilot_per_bin < 1) {
    throw ConfigError("sample_Y: bad proposal spec");
  }
  if (!(cfg.uniform_mix > 0.0 && cfg.uniform_mix <= 1.0)) {
    throw ConfigError("sample_Y: uniform mix must lie in (0, 1] to keep the proposal positive");
  }
  YSample out;
  const auto bins = static_cast<std::size_t>(cfg.pilot_bins);
  const double width = cfg.b_max / static_cast<double>(bins);
  // Pilot: mean path weight per bin.
  std::vector<double> pilot(bins, 0.0);
  for (std::size_t j = 0; j < bins; ++j) {
    for (int k = 0; k < cfg.pilot_per_bin; ++k) {
      const std::uint64_t idx = j * 1'000'003ull + static_cast<std::uint64_t>(k);
      Stream u(seed, idx, Purpose::kPilot);
      const double b = (static_cast<double>(j) + u.uniform()) * width;
      const auto path = sample_gamma(b, cfg.dt, cfg.horizon, derive_seed(seed, idx, Purpose::kPilot));
      if (!path.completed) continue;
      pilot[j] += path_weight(path, table, cfg.sigma, cfg.remainder_tolerance).weight;
    }
    pilot[j] /= cfg.pilot_per_bin;
  }
  const double total = std::accumulate(pilot.begin(), pilot.end(), 0.0);
  std::vector<double> prob(bins);
  for (std::size_t j = 0; j < bins; ++j) {
    const double pj = total > 0.0 ? pilot[j] / total : 1.0 / static_cast<double>(bins);
    prob[j] = (1.0 - cfg.uniform_mix) * pj + cfg.uniform_mix / static_cast<double>(bins);
  }
  out.bin_edges.resize(bins + 1);
  out.bin_density.resize(bins);
  for (std::size_t j = 0; j <= bins; ++j) out.bin_edges[j] = static_cast<double>(j) * width;
  for (std::size_t j = 0; j < bins; ++j) out.bin_density[j] = prob[j] / width;
  std::vector<double> cum(bins);
  std::partial_sum(prob.begin(), prob.end(), cum.begin());

  out.draws.reserve(n);
  std::vector<double> iws;
  iws.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Stream u(seed, i, Purpose::kProposal);
    const double r = u.uniform() * cum.back();
    const auto j = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), r) - cum.begin()), bins - 1);
    Backbone bb;
    bb.b = (static_cast<double>(j) + u.uniform()) * width;
    bb.seed = derive_seed(seed, i, Purpose::kGamma);
    bb.path = sample_gamma(bb.b, cfg.dt, cfg.horizon, bb.seed);
    bb.proposal_density = out.bin_density[j];
    if (bb.path.completed) {
      const auto pw = path_weight(bb.path, table, cfg.sigma, cfg.remainder_tolerance);
      bb.path_weight = pw.weight;
      bb.remainder = pw.remainder;
      if (pw.flagged) ++out.flagged;
    } else {
      // Truncated law: paths whose Brownian phase outlives the horizon carry
      // no mass.
      bb.path_weight = 0.0;
      bb.remainder = INFINITY;
      ++out.flagged;
    }
    bb.iw = bb.path_weight / bb.proposal_density;
    iws.push_back(bb.iw);
    out.draws.push_back(std::move(bb));
  }
  out.c1 = stats::mean_se(iws);
  out.ess = stats::effective_sample_size(iws);
  if (check_ess && out.ess < 0.1 * static_cast<double>(n)) {
    throw DiagnosticsError("sample_Y: effective sample size " + std::to_string(out.ess) +
                           " below 10% of n; refine the pilot proposal (more bins or pilot draws)");
  }
  return out;
}

DecorationSample sample_decoration(const Backbone& backbone, const DecorationConfig& cfg,
                                   std::uint64_t seed) {
  if (!(cfg.zeta_max >= 0.0)) throw ConfigError("zeta_max must be >= 0");
  if (cfg.zeta_max > backbone.path.horizon + 1e-9) {
    throw ConfigError("backbone path shorter than zeta_max");
  }
  DecorationSample d;
  d.b = backbone.b;
  d.weight = backbone.iw;
  std::vector<double> atoms{0.0};
  Stream rng(seed, 0, Purpose::kBirths);
  const auto count = rng.poisson(2.0 * cfg.zeta_max);
  std::vector<double> times(count);
  for (auto& s : times) s = rng.uniform() * cfg.zeta_max;
  std::sort(times.begin(), times.end());
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double s = times[j];
    const double y = backbone.y_at(s, cfg.sigma);
    SimConfig c;
    c.horizon = s;
    c.start_position = y;
    c.seed = derive_seed(seed, j, Purpose::kReplica);
    c.record_arena = false;
    c.prune.cap = cfg.cap;
    const auto r = run(c);
    const bool accept = !r.snapshot.atoms.empty() && r.snapshot.atoms.front().position > 0.0;
    d.candidates.push_back({s, y, accept});
    if (!accept) continue;
    d.atoms_total += r.snapshot.size();
    for (const auto& a : r.snapshot.atoms) {
      if (a.position > cfg.q_max) break;
      atoms.push_back(a.position);
    }
  }
  d.q = PointMeasure(std::move(atoms));
  return d;
}

KernelTable::KernelTable(KernelSpec spec, std::vector<double> values)
    : spec_(std::move(spec)), values_(std::move(values)) {
  if (values_.size() != rows() * cols()) throw ConfigError("kernel table size mismatch");
}

std::size_t KernelTable::rows() const {
  return static_cast<std::size_t>(std::llround(spec_.v_max / spec_.dv)) + 1;
}

std::size_t KernelTable::cols() const {
  return static_cast<std::size_t>(std::llround((spec_.x_hi - spec_.x_lo) / spec_.dx)) + 1;
}

double KernelTable::delta(double v, double x) const {
  if (values_.empty() || v < 0.0 || v > spec_.v_max + 1e-12) return 0.0;
  if (x < spec_.x_lo || x > spec_.x_hi) return 0.0;
  const double pv = std::min(v / spec_.dv, static_cast<double>(rows() - 1));
  const double px = std::min((x - spec_.x_lo) / spec_.dx, static_cast<double>(cols() - 1));
  const auto i = std::min(static_cast<std::size_t>(pv), rows() - 2);
  const auto j = std::min(static_cast<std::size_t>(px), cols() - 2);
  const double a = pv - static_cast<double>(i), c = px - static_cast<double>(j);
  return (1 - a) * ((1 - c) * at(i, j) + c * at(i, j + 1)) +
         a * ((1 - c) * at(i + 1, j) + c * at(i + 1, j + 1));
}

double KernelTable::origin() const {
  return 0.5 * -std::expm1(-weighted_count(PointMeasure({0.0}), spec_.alpha, spec_.sets));
}

double weighted_count(const PointMeasure& m, const std::vector<double>& alpha,
                      const std::vector<Interval>& sets, double x) {
  if (alpha.size() != sets.size()) throw ConfigError("alpha and sets differ in length");
  double s = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (alpha[j] == 0.0) continue;
    s += alpha[j] * static_cast<double>(m.count({sets[j].lo + x, sets[j].hi + x}));
  }
  return s;
}

KernelTable estimate_kernel(const KernelSpec& spec, std::uint64_t seed) {
  if (!(spec.dv > 0.0) || !(spec.dx > 0.0) || !(spec.x_hi > spec.x_lo) || !(spec.v_max >= spec.dv)) {
    throw ConfigError("kernel lattice is degenerate");
  }
  if (spec.runs == 0) throw ConfigError("kernel needs at least one run per row");
  const auto nr = static_cast<std::size_t>(std::llround(spec.v_max / spec.dv)) + 1;
  const auto nc = static_cast<std::size_t>(std::llround((spec.x_hi - spec.x_lo) / spec.dx)) + 1;
  std::vector<double> values(nr * nc, 0.0);
  auto xs = [&](std::size_t j) { return spec.x_lo + static_cast<double>(j) * spec.dx; };
  const PointMeasure origin_measure({0.0});
  for (std::size_t j = 0; j < nc; ++j) {
    const double x = xs(j);
    if (x <= 0.0) values[j] = -std::expm1(-weighted_count(origin_measure, spec.alpha, spec.sets, x));
  }
  for (std::size_t i = 1; i < nr; ++i) {
    const double v = static_cast<double>(i) * spec.dv;
    double* row = values.data() + i * nc;
    for (std::size_t r = 0; r < spec.runs; ++r) {
      SimConfig c;
      c.horizon = v;
      c.seed = seed;
      c.stream_offset = i * spec.runs + r;
      c.record_arena = false;
      const auto res = run(c);
      std::vector<double> pos;
      pos.reserve(res.snapshot.size());
      for (const auto& a : res.snapshot.atoms) pos.push_back(a.position);
      const PointMeasure m(std::move(pos));
      const double lo = m.min();
      for (std::size_t j = 0; j < nc; ++j) {
        const double x = xs(j);
        if (x > lo) break;
        row[j] -= std::expm1(-weighted_count(m, spec.alpha, spec.sets, x));
      }
    }
    for (std::size_t j = 0; j < nc; ++j) row[j] /= static_cast<double>(spec.runs);
  }
  return KernelTable(spec, std::move(values));
}

std::vector<double> sample_ppp(double a, std::uint64_t seed, double lo) {
  if (!std::isfinite(a)) throw ConfigError("PPP cutoff must be finite");
  Stream rng(seed, 0, Purpose::kPoisson);
  const double base = std::isfinite(lo) ? std::exp(lo) : 0.0;
  const double mass = std::exp(a) - base;
  if (mass <= 0.0) return {};
  const auto k = rng.poisson(mass);
  std::vector<double> xs(k);
  for (auto& x : xs) x = std::log(base + rng.uniform() * mass);
  std::sort(xs.begin(), xs.end());
  return xs;
}

PppPrime sample_ppp_prime(std::uint64_t seed, double cutoff) {
  if (!(cutoff >= 0.0)) throw ConfigError("P' cutoff must be >= 0");
  Stream rng(seed, 0, Purpose::kPoisson);
  PppPrime p;
  p.e = rng.exponential();
  const double span = std::expm1(cutoff);
  const auto k = rng.poisson(p.e * span);
  p.atoms.push_back(0.0);
  for (std::uint64_t i = 0; i < k; ++i) p.atoms.push_back(std::log1p(rng.uniform() * span));
  std::sort(p.atoms.begin(), p.atoms.end());
  return p;
}

LimitMeasureSample sample_L(Interval window, const std::vector<DecorationSample>& pool,
                            double q_max, std::uint64_t seed, LimitVariant variant) {
  if (pool.empty()) throw ConfigError("sample_L needs a non-empty decoration pool");
  LimitMeasureSample out;
  if (variant == LimitVariant::kL) {
    out.ppp = sample_ppp(window.hi, seed, window.lo - q_max);
  } else {
    out.ppp = sample_ppp_prime(seed, std::max(window.hi, 0.0)).atoms;
  }
  Stream rng(seed, 1, Purpose::kResample);
  std::vector<double> atoms;
  for (double x : out.ppp) {
    const auto& d = pool[rng.below(pool.size())];
    for (double q : d.q.atoms()) {
      const double v = x + q;
      if (v > window.hi) break;
      if (v >= window.lo) atoms.push_back(v);
    }
  }
  out.window = PointMeasure(std::move(atoms));
  return out;
}

std::vector<DecorationSample> resample_pool(const std::vector<DecorationSample>& weighted,
                                            std::size_t m, std::uint64_t seed) {
  if (weighted.empty()) throw ConfigError("resample_pool: empty input");
  std::vector<double> cum(weighted.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weighted.size(); ++i) {
    if (!(weighted[i].weight >= 0.0)) throw NumericError("resample_pool: negative weight");
    acc += weighted[i].weight;
    cum[i] = acc;
  }
  if (!(acc > 0.0)) throw DiagnosticsError("resample_pool: all weights are zero");
  std::vector<DecorationSample> out;
  out.reserve(m);
  Stream rng(seed, 0, Purpose::kResample);
  for (std::size_t k = 0; k < m; ++k) {
    const double r = rng.uniform() * acc;
    auto i = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), r) - cum.begin());
    i = std::min(i, weighted.size() - 1);
    DecorationSample d = weighted[i];
    d.weight = 1.0;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace bbm
