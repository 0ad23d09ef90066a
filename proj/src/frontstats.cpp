#include "bbm/frontstats.hpp"

#include <algorithm>
#include <cmath>

#include "bbm/errors.hpp"
#include "bbm/stats.hpp"

namespace bbm {

namespace {

// Neumaier summation over a generated sequence.
template <class F>
double neumaier(const PopulationSnapshot& s, F f) {
  double sum = 0.0, c = 0.0;
  for (const auto& a : s.atoms) {
    const double x = f(a.position);
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) c += (sum - t) + x;
    else c += (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

}  // namespace

double additive_martingale(const PopulationSnapshot& s, bool include_pruned) {
  const double m = neumaier(s, [](double x) { return std::exp(-x); });
  return include_pruned ? m + s.pruned_m : m;
}

double derivative_martingale(const PopulationSnapshot& s, bool include_pruned) {
  const double z = neumaier(s, [](double x) { return x * std::exp(-x); });
  return include_pruned ? z + s.pruned_z : z;
}

double front_center(double t, double c_b) {
  if (!(t > 0.0)) throw DomainError("front center needs t > 0");
  return 1.5 * std::log(t) + c_b;
}

double recentering_shift(const PopulationSnapshot& s, const RecenterSpec& spec) {
  switch (spec.mode) {
    case Recentering::kPrime:
      return -s.leftmost();
    case Recentering::kBar:
    case Recentering::kHat: {
      double z;
      if (spec.mode == Recentering::kBar) {
        if (!spec.z) throw ConfigError("bar recentering needs an external Z");
        z = *spec.z;
      } else {
        z = derivative_martingale(s, spec.include_pruned);
      }
      if (!(z > 0.0)) throw DomainError("recentering needs Z > 0, got " + std::to_string(z));
      if (!(spec.c > 0.0)) throw DomainError("recentering needs C > 0");
      return -front_center(s.time, spec.c_b) + std::log(spec.c * z);
    }
  }
  return 0.0;
}

PointMeasure recentered_measure(const PopulationSnapshot& s, const RecenterSpec& spec) {
  const double shift = recentering_shift(s, spec);
  std::vector<double> atoms;
  atoms.reserve(s.atoms.size());
  for (const auto& a : s.atoms) atoms.push_back(a.position + shift);
  if (spec.mode == Recentering::kPrime && !atoms.empty()) atoms.front() = 0.0;
  return PointMeasure(std::move(atoms));
}

FrontRecord front_record(const PopulationSnapshot& s, double c_b) {
  FrontRecord r;
  r.t = s.time;
  r.n = s.size();
  r.x1 = s.atoms.empty() ? NAN : s.leftmost();
  r.m = additive_martingale(s, true);
  r.z = derivative_martingale(s, true);
  r.m_t = s.time > 0.0 ? front_center(s.time, c_b) : NAN;
  r.pruned = s.pruned;
  return r;
}

GumbelFit gumbel_fit(std::span<const double> samples) {
  if (samples.size() < 100) throw DiagnosticsError("gumbel fit needs at least 100 samples");
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  if (*mn == *mx) throw DiagnosticsError("gumbel fit: degenerate (constant) samples");
  // Negate to a Gumbel law of maxima and solve the profile score in the scale.
  const double n = static_cast<double>(samples.size());
  std::vector<double> y(samples.size());
  double ybar = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = -samples[i];
    ybar += y[i];
  }
  ybar /= n;
  const double ymin = -*mx;
  auto score = [&](double beta) {
    double s0 = 0.0, s1 = 0.0;
    for (double v : y) {
      const double w = std::exp(-(v - ymin) / beta);
      s0 += w;
      s1 += v * w;
    }
    return ybar - s1 / s0 - beta;
  };
  double sd = 0.0;
  for (double v : y) sd += (v - ybar) * (v - ybar);
  sd = std::sqrt(sd / (n - 1.0));
  double lo = 1e-6 * sd, hi = 10.0 * sd;
  while (score(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (score(mid) > 0.0 ? lo : hi) = mid;
  }
  const double beta = 0.5 * (lo + hi);
  double s0 = 0.0;
  for (double v : y) s0 += std::exp(-(v - ymin) / beta);
  const double mu_max = ymin - beta * std::log(s0 / n);
  GumbelFit f;
  f.location = -mu_max;
  f.scale = beta;
  f.n = samples.size();
  const auto ks = stats::ks_one_sample(samples, [&](double x) {
    return -std::expm1(-std::exp((x - f.location) / f.scale));
  });
  f.ks = ks.statistic;
  f.pvalue = ks.pvalue;
  return f;
}

}  // namespace bbm
