#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "bbm/engine.hpp"
#include "bbm/fkpp.hpp"
#include "bbm/point_measure.hpp"
#include "bbm/stats.hpp"

namespace bbm {

// Gamma^(b): Brownian motion until T_b, then b minus a 3-d Bessel process.
struct GammaPath {
  double b = 0.0;
  double dt = 0.0;
  double horizon = 0.0;
  std::vector<double> values;  // at times i * dt, i = 0..n
  double t_b = 0.0;
  bool completed = false;  // false when T_b > horizon (resample)

  double time(std::size_t i) const { return static_cast<double>(i) * dt; }
  // Linear interpolation that also passes through the exact point (T_b, b).
  double value_at(double s) const;
};

GammaPath sample_gamma(double b, double dt, double horizon, std::uint64_t seed);

struct PathIntegral {
  double integral = 0.0;   // trapezoid value of int_0^H f(v, sigma Gamma_v) dv
  double remainder = 0.0;  // bound for the part over (H, infinity)
  double weight = 0.0;     // exp(-2 integral)
  bool flagged = false;    // remainder above tolerance or incomplete path
};

// exp(-2 int_0^H G_v(sigma Gamma_v) dv); the remainder uses the stretching
// bound along a square-root extrapolation of the Bessel phase.
PathIntegral path_weight(const GammaPath& path, const FkppTable& table, double sigma = 1.4142135623730951,
                         double tolerance = 1e-3);

// Trapezoid integral of f(v, sigma Gamma_v) over [0, min(H, v_max)]. When
// origin is given it replaces f(0, 0): G_v(sigma Gamma_v) tends to 1/2 in
// mean as v -> 0 although G_0(0) = 1.
double path_integral(const GammaPath& path, const std::function<double(double, double)>& f,
                     double sigma, double v_max, std::optional<double> origin = std::nullopt);

struct YConfig {
  double dt = 0.01;
  double horizon = 30.0;
  double b_max = 8.0;
  int pilot_bins = 16;
  int pilot_per_bin = 40;
  double uniform_mix = 0.1;  // proposal = (1-mix) pilot + mix uniform
  double sigma = 1.4142135623730951;
  double remainder_tolerance = 1e-3;
};

struct Backbone {
  double b = 0.0;
  GammaPath path;
  double path_weight = 0.0;
  double remainder = 0.0;
  double proposal_density = 0.0;
  double iw = 0.0;  // path_weight / proposal_density
  std::uint64_t seed = 0;

  double y_at(double s, double sigma) const { return -sigma * path.value_at(s); }
};

struct YSample {
  std::vector<Backbone> draws;
  stats::Estimate c1;
  double ess = 0.0;
  std::vector<double> bin_edges;
  std::vector<double> bin_density;
  std::size_t flagged = 0;
};

// Importance sampling of the backward path; throws DiagnosticsError when the
// effective sample size falls below 10% of n (unless check_ess is false).
YSample sample_Y(const FkppTable& table, const YConfig& cfg, std::size_t n, std::uint64_t seed,
                 bool check_ess = true);

struct DecorationConfig {
  double zeta_max = 8.0;
  double q_max = 12.0;  // atoms above this are counted but not stored
  std::uint64_t cap = 5'000'000;
  double sigma = 1.4142135623730951;
};

struct Candidate {
  double s;
  double y;
  bool accepted;
};

struct DecorationSample {
  double b = 0.0;
  double weight = 1.0;
  std::vector<Candidate> candidates;
  PointMeasure q;  // delta_0 plus accepted relative atoms in [0, q_max]
  std::size_t atoms_total = 1;
};

DecorationSample sample_decoration(const Backbone& backbone, const DecorationConfig& cfg,
                                   std::uint64_t seed);

// PPP with intensity e^x on (-inf, a] (optionally only atoms >= lo).
std::vector<double> sample_ppp(double a, std::uint64_t seed, double lo = -INFINITY);

struct PppPrime {
  double e = 0.0;
  std::vector<double> atoms;  // includes 0
};

// P': atom at 0 plus PPP with intensity e * e^x on [0, cutoff].
PppPrime sample_ppp_prime(std::uint64_t seed, double cutoff = 12.0);

// Delta_v(x) = G*_v(x) - G_v(x)
//            = E[(1 - exp(-sum_j alpha_j N(v)(x + A_j))) 1{min N(v) >= x}],
// tabulated by Monte Carlo over BBM runs of duration v on a (v, x) lattice.
// Outside the x range the kernel is taken as 0 (no mass can reach the sets).
struct KernelSpec {
  std::vector<double> alpha;
  std::vector<Interval> sets;
  double v_max = 8.0;
  double dv = 0.1;
  double x_lo = -20.0;
  double x_hi = 12.0;
  double dx = 0.05;
  std::size_t runs = 500;  // BBM runs per v row
};

class KernelTable {
 public:
  KernelTable() = default;
  KernelTable(KernelSpec spec, std::vector<double> values);

  const KernelSpec& spec() const { return spec_; }
  // Bilinear interpolation; 0 for v > v_max or x outside [x_lo, x_hi].
  double delta(double v, double x) const;
  // Mean-limit value at (0+, 0): half the atom's own contribution.
  double origin() const;
  std::size_t rows() const;
  std::size_t cols() const;
  double at(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }

 private:
  KernelSpec spec_;
  std::vector<double> values_;
};

// Exact row at v = 0 (N(0) = delta_0), Monte Carlo rows elsewhere.
KernelTable estimate_kernel(const KernelSpec& spec, std::uint64_t seed);

// sum_j alpha_j m(A_j) for a point measure shifted by x.
double weighted_count(const PointMeasure& m, const std::vector<double>& alpha,
                      const std::vector<Interval>& sets, double x = 0.0);

enum class LimitVariant { kL, kLPrime };

struct LimitMeasureSample {
  std::vector<double> ppp;   // atoms of P (or P') used
  PointMeasure window;       // L restricted to the window
  double weight = 1.0;
};

// Decorations are drawn from an (unweighted) pool; callers resample weighted
// decorations into the pool first (see resample_pool).
LimitMeasureSample sample_L(Interval window, const std::vector<DecorationSample>& pool,
                            double q_max, std::uint64_t seed, LimitVariant variant);

// Multinomial resampling of weighted decorations into an unweighted pool of size m.
std::vector<DecorationSample> resample_pool(const std::vector<DecorationSample>& weighted,
                                            std::size_t m, std::uint64_t seed);

}  // namespace bbm
