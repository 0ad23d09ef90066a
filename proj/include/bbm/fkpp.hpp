#pragma once

#include <string>
#include <vector>

namespace bbm {

enum class Scheme { kExplicit, kSemiImplicit };

struct FkppSpec {
  double dx = 0.02;
  double dt = 0.01;
  double half_width = 60.0;  // window is [center - half_width, center + half_width]
  double horizon = 20.0;
  Scheme scheme = Scheme::kSemiImplicit;
  bool reaction = true;
  double shift = 0.0;           // initial condition 1{x >= shift}
  // Optional u(0, .) on the grid x = shift - half_width + i dx; replaces the
  // step and fixes the boundary values at its first and last entries.
  std::vector<double> initial;
  double dense_until = 1.0;     // store every step up to this time
  double store_every = 0.05;    // then store at this spacing
  std::vector<double> store_times;  // extra stored times (multiples of dt)
  bool track_front = true;
  double recenter_every = 1.0;
};

struct FkppSlice {
  double t = 0.0;
  double x0 = 0.0;  // position of u[0]
  double median = 0.0;  // m_t(1/2), NaN when 1/2 is not attained
  std::vector<double> u;
};

class FkppTable {
 public:
  FkppTable() = default;
  FkppTable(FkppSpec spec, std::vector<FkppSlice> slices, double clip_max);

  const FkppSpec& spec() const { return spec_; }
  const std::vector<FkppSlice>& slices() const { return slices_; }
  double horizon() const { return slices_.empty() ? 0.0 : slices_.back().t; }
  double dx() const { return spec_.dx; }
  double stretching_c() const { return stretch_c_; }
  double max_clip() const { return clip_max_; }

  // Index of the stored slice at time t (exact match up to 1e-9), or throws.
  std::size_t slice_index(double t) const;
  bool has_time(double t) const;

  // G_t(x): linear in t between stored slices and in x within a slice; below
  // the grid the stretching bound c(|r|+1)e^r (r = x - m_t) is returned,
  // above it 1. Values are clamped to [0, 1].
  double g(double t, double x) const;
  // Value in a stored slice at fractional position.
  double slice_value(std::size_t k, double x) const;
  double median_at(double t) const;  // interpolated m_t(1/2)

  // Small-time lookup table for fast repeated G evaluation at fixed slices is
  // handled by callers; this class stays immutable after construction.

 private:
  FkppSpec spec_;
  std::vector<FkppSlice> slices_;
  double stretch_c_ = 1.0;
  double clip_max_ = 0.0;
};

// Solves u_t = u_xx - 2 u_x + u(1 - u), u(0, x) = 1{x >= shift}.
FkppTable solve_fkpp(const FkppSpec& spec);

// m_t(eps): first crossing of level eps in the stored slice at t.
double level_position(const FkppTable& table, double t, double eps);

struct WaveProfile {
  double t = 0.0;
  double dx = 0.0;
  double x_lo = 0.0;  // x of w[0]
  std::vector<double> w;
  double at(double x) const;  // linear interpolation; 0 / 1 outside
  // Inverse CDF restricted to the lower tail, using log-linear interpolation
  // so tail quantiles stay accurate. Requires p in (w.front(), 1).
  double quantile(double p) const;
};

// w(x) = u(t, m_t(1/2) + x) on the lattice x = j dx, |x| <= half_range.
WaveProfile wave_profile(const FkppTable& table, double t, double half_range = 40.0);

struct TailFit {
  double c = 0.0;              // constant fit of w(x) / (|x| e^x)
  double residual = 0.0;       // RMS of ratio - c, relative to c
  double variation = 0.0;      // (max - min) / mean of the ratio over the window
  double affine_c = 0.0;       // least squares w ~ (C |x| + D) e^x
  double affine_d = 0.0;
  double affine_residual = 0.0;
  bool flagged = false;        // residual above threshold
  double lo = -8.0, hi = -4.0;
};

TailFit tail_constant(const WaveProfile& w, double lo = -8.0, double hi = -4.0,
                      double residual_threshold = 0.05);

// Variant without the |x| factor, w ~ C e^x; used as a regression guard.
TailFit tail_constant_exponential(const WaveProfile& w, double lo = -8.0, double hi = -4.0);

struct CenteringFit {
  double c_b = 0.0;       // limit of m_t(1/2) - 1.5 log t
  double slope = 0.0;     // coefficient of t^{-1/2}
  double residual = 0.0;  // RMS of the fit
  double t_min = 0.0, t_max = 0.0;
};

// Least squares m_t(1/2) - 1.5 log t = C_B + a / sqrt(t) over stored t in [t_min, t_max].
CenteringFit fit_centering(const FkppTable& table, double t_min, double t_max);

std::string scheme_name(Scheme s);

}  // namespace bbm
