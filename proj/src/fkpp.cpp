#include "bbm/fkpp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bbm/errors.hpp"

namespace bbm {

std::string scheme_name(Scheme s) {
  return s == Scheme::kExplicit ? "explicit" : "semi-implicit";
}

namespace {

double find_level(const std::vector<double>& u, double x0, double dx, double eps) {
  const auto it = std::lower_bound(u.begin(), u.end(), eps);
  if (it == u.end() || it == u.begin()) return std::numeric_limits<double>::quiet_NaN();
  const auto i = static_cast<std::size_t>(it - u.begin());
  const double a = u[i - 1], b = u[i];
  const double frac = b > a ? (eps - a) / (b - a) : 0.0;
  return x0 + (static_cast<double>(i - 1) + frac) * dx;
}

class Solver {
 public:
  explicit Solver(const FkppSpec& s) : s_(s) {
    if (!(s_.dx > 0.0) || !(s_.dt > 0.0) || !(s_.half_width > 0.0) || !(s_.horizon >= 0.0)) {
      throw ConfigError("fkpp: dx, dt, half_width must be positive and horizon >= 0");
    }
    if (!(s_.dx < 1.0)) throw ConfigError("fkpp: dx must be < 1 for a monotone advection stencil");
    if (s_.scheme == Scheme::kSemiImplicit && s_.dt > 1.0) {
      throw ConfigError("fkpp: semi-implicit scheme needs dt <= 1");
    }
    if (s_.scheme == Scheme::kExplicit) {
      const double bound = s_.dx * s_.dx / (2.0 + s_.dx * s_.dx);
      if (s_.dt > bound) {
        throw ConfigError("fkpp: explicit scheme unstable, need dt <= " + std::to_string(bound));
      }
    }
    const auto cells = static_cast<std::size_t>(std::llround(2.0 * s_.half_width / s_.dx));
    n_ = cells + 1;
    if (n_ < 5) throw ConfigError("fkpp: grid too small");
    x0_ = s_.shift - static_cast<double>(cells / 2) * s_.dx;
    u_.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double x = x0_ + static_cast<double>(i) * s_.dx;
      const double d = x - s_.shift;
      if (std::abs(d) < 1e-9 * s_.dx) u_[i] = 0.5;
      else u_[i] = d > 0.0 ? 1.0 : 0.0;
    }
    u_.front() = 0.0;
    u_.back() = 1.0;
    if (!s_.initial.empty()) {
      if (s_.initial.size() != n_) {
        throw ConfigError("fkpp: initial profile needs " + std::to_string(n_) + " grid values");
      }
      u_ = s_.initial;
    }
    const double r2 = s_.dt / (s_.dx * s_.dx), r1 = s_.dt / s_.dx;
    lower_ = -(r2 + r1);
    diag_ = 1.0 + 2.0 * r2;
    upper_ = -(r2 - r1);
    if (s_.scheme == Scheme::kSemiImplicit) {
      // Thomas factorisation for the constant interior matrix.
      const std::size_t m = n_ - 2;
      cp_.assign(m, 0.0);
      inv_.assign(m, 0.0);
      double denom = diag_;
      inv_[0] = 1.0 / denom;
      cp_[0] = upper_ * inv_[0];
      for (std::size_t i = 1; i < m; ++i) {
        denom = diag_ - lower_ * cp_[i - 1];
        inv_[i] = 1.0 / denom;
        cp_[i] = upper_ * inv_[i];
      }
    }
    rhs_.assign(n_, 0.0);
  }

  FkppTable run() {
    const auto steps = static_cast<std::size_t>(std::llround(s_.horizon / s_.dt));
    if (std::abs(static_cast<double>(steps) * s_.dt - s_.horizon) > 1e-9 * std::max(1.0, s_.horizon)) {
      throw ConfigError("fkpp: horizon must be a multiple of dt");
    }
    const auto dense_steps = static_cast<std::size_t>(std::floor(s_.dense_until / s_.dt + 1e-9));
    const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(s_.store_every / s_.dt)));
    std::vector<std::size_t> extra;
    for (double t : s_.store_times) {
      const auto k = static_cast<std::size_t>(std::llround(t / s_.dt));
      if (t < 0.0 || t > s_.horizon + 1e-9 || std::abs(static_cast<double>(k) * s_.dt - t) > 1e-9) {
        throw ConfigError("fkpp: stored time " + std::to_string(t) + " is not a step multiple");
      }
      extra.push_back(k);
    }
    std::sort(extra.begin(), extra.end());
    const auto recenter_stride =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(s_.recenter_every / s_.dt)));

    store(0);
    for (std::size_t k = 1; k <= steps; ++k) {
      step();
      if (s_.track_front && k % recenter_stride == 0) recenter();
      if (k <= dense_steps || k % stride == 0 || k == steps ||
          std::binary_search(extra.begin(), extra.end(), k)) {
        store(k);
      }
    }
    return FkppTable(s_, std::move(slices_), clip_max_);
  }

 private:
  void step() {
    const double dt = s_.dt;
    if (s_.scheme == Scheme::kSemiImplicit) {
      const std::size_t m = n_ - 2;
      for (std::size_t i = 1; i + 1 < n_; ++i) {
        const double v = u_[i];
        rhs_[i - 1] = s_.reaction ? v + dt * v * (1.0 - v) : v;
      }
      rhs_[0] -= lower_ * u_.front();
      rhs_[m - 1] -= upper_ * u_.back();
      // forward sweep
      rhs_[0] *= inv_[0];
      for (std::size_t i = 1; i < m; ++i) rhs_[i] = (rhs_[i] - lower_ * rhs_[i - 1]) * inv_[i];
      for (std::size_t i = m - 1; i-- > 0;) rhs_[i] -= cp_[i] * rhs_[i + 1];
      for (std::size_t i = 0; i < m; ++i) u_[i + 1] = rhs_[i];
    } else {
      const double r2 = dt / (s_.dx * s_.dx), r1 = dt / s_.dx;
      for (std::size_t i = 1; i + 1 < n_; ++i) {
        const double v = u_[i];
        double nv = v + r2 * (u_[i + 1] - 2.0 * v + u_[i - 1]) - r1 * (u_[i + 1] - u_[i - 1]);
        if (s_.reaction) nv += dt * v * (1.0 - v);
        rhs_[i] = nv;
      }
      for (std::size_t i = 1; i + 1 < n_; ++i) u_[i] = rhs_[i];
    }
    enforce();
  }

  void enforce() {
    for (std::size_t i = 0; i < n_; ++i) {
      double v = u_[i];
      if (!std::isfinite(v)) throw NumericError("fkpp: non-finite value");
      if (v < 0.0) {
        if (v < -1e-10) throw NumericError("fkpp: value below 0 beyond tolerance");
        clip_max_ = std::max(clip_max_, -v);
        v = 0.0;
      } else if (v > 1.0) {
        if (v > 1.0 + 1e-10) throw NumericError("fkpp: value above 1 beyond tolerance");
        clip_max_ = std::max(clip_max_, v - 1.0);
        v = 1.0;
      }
      if (i > 0 && v < u_[i - 1]) {
        const double gap = u_[i - 1] - v;
        if (gap > 1e-10) throw NumericError("fkpp: monotonicity violated beyond tolerance");
        clip_max_ = std::max(clip_max_, gap);
        v = u_[i - 1];
      }
      u_[i] = v;
    }
  }

  void recenter() {
    const double m = find_level(u_, x0_, s_.dx, 0.5);
    if (std::isnan(m)) return;
    const double center = x0_ + 0.5 * static_cast<double>(n_ - 1) * s_.dx;
    const auto k = static_cast<long>(std::lround((m - center) / s_.dx));
    if (k == 0) return;
    const auto n = static_cast<long>(n_);
    if (std::labs(k) >= n) throw NumericError("fkpp: front left the window");
    const double lo = u_.front(), hi = u_.back();
    if (k > 0) {
      for (long i = 0; i + k < n; ++i) u_[i] = u_[i + k];
      for (long i = n - k; i < n; ++i) u_[i] = hi;
    } else {
      for (long i = n - 1; i + k >= 0; --i) u_[i] = u_[i + k];
      for (long i = 0; i < -k; ++i) u_[i] = lo;
    }
    u_.front() = lo;
    u_.back() = hi;
    x0_ += static_cast<double>(k) * s_.dx;
  }

  void store(std::size_t k) {
    FkppSlice sl;
    sl.t = static_cast<double>(k) * s_.dt;
    sl.x0 = x0_;
    sl.u = u_;
    sl.median = find_level(u_, x0_, s_.dx, 0.5);
    slices_.push_back(std::move(sl));
  }

  FkppSpec s_;
  std::size_t n_ = 0;
  double x0_ = 0.0;
  std::vector<double> u_, rhs_, cp_, inv_;
  double lower_ = 0.0, diag_ = 0.0, upper_ = 0.0;
  double clip_max_ = 0.0;
  std::vector<FkppSlice> slices_;
};

}  // namespace

FkppTable solve_fkpp(const FkppSpec& spec) { return Solver(spec).run(); }

FkppTable::FkppTable(FkppSpec spec, std::vector<FkppSlice> slices, double clip_max)
    : spec_(std::move(spec)), slices_(std::move(slices)), clip_max_(clip_max) {
  // Fitted constant of the stretching bound: the smallest c with
  // u(t, m_t + r) <= c (|r| + 1) e^r on every stored slice (r <= 0).
  double c = 0.0;
  for (const auto& sl : slices_) {
    if (std::isnan(sl.median)) continue;
    for (std::size_t i = 0; i < sl.u.size(); ++i) {
      const double r = sl.x0 + static_cast<double>(i) * spec_.dx - sl.median;
      if (r > 0.0) break;
      if (sl.u[i] <= 0.0) continue;
      c = std::max(c, sl.u[i] / ((std::abs(r) + 1.0) * std::exp(r)));
    }
  }
  stretch_c_ = c > 0.0 ? c : 1.0;
}

std::size_t FkppTable::slice_index(double t) const {
  const auto it = std::lower_bound(slices_.begin(), slices_.end(), t - 1e-9,
                                   [](const FkppSlice& s, double v) { return s.t < v; });
  if (it == slices_.end() || std::abs(it->t - t) > 1e-9) {
    throw QueryError("time " + std::to_string(t) + " is not a stored slice");
  }
  return static_cast<std::size_t>(it - slices_.begin());
}

bool FkppTable::has_time(double t) const {
  const auto it = std::lower_bound(slices_.begin(), slices_.end(), t - 1e-9,
                                   [](const FkppSlice& s, double v) { return s.t < v; });
  return it != slices_.end() && std::abs(it->t - t) <= 1e-9;
}

double FkppTable::slice_value(std::size_t k, double x) const {
  const auto& sl = slices_[k];
  const double pos = (x - sl.x0) / spec_.dx;
  if (pos < 0.0) {
    if (std::isnan(sl.median)) return 0.0;
    const double r = x - sl.median;
    return std::min(1.0, stretch_c_ * (std::abs(r) + 1.0) * std::exp(r));
  }
  const double last = static_cast<double>(sl.u.size() - 1);
  if (pos >= last) return 1.0;
  const auto i = static_cast<std::size_t>(pos);
  const double f = pos - static_cast<double>(i);
  return sl.u[i] + f * (sl.u[i + 1] - sl.u[i]);
}

double FkppTable::g(double t, double x) const {
  if (slices_.empty()) throw QueryError("empty table");
  if (t < 0.0 || t > horizon() + 1e-9) {
    throw QueryError("time " + std::to_string(t) + " beyond the table horizon");
  }
  const auto it = std::upper_bound(slices_.begin(), slices_.end(), t,
                                   [](double v, const FkppSlice& s) { return v < s.t; });
  if (it == slices_.end()) return std::clamp(slice_value(slices_.size() - 1, x), 0.0, 1.0);
  const auto k1 = static_cast<std::size_t>(it - slices_.begin());
  const std::size_t k0 = k1 - 1;
  const double t0 = slices_[k0].t, t1 = slices_[k1].t;
  const double th = (t - t0) / (t1 - t0);
  const double v = (1.0 - th) * slice_value(k0, x) + th * slice_value(k1, x);
  return std::clamp(v, 0.0, 1.0);
}

double FkppTable::median_at(double t) const {
  const auto it = std::upper_bound(slices_.begin(), slices_.end(), t,
                                   [](double v, const FkppSlice& s) { return v < s.t; });
  if (it == slices_.end()) return slices_.back().median;
  const auto k1 = static_cast<std::size_t>(it - slices_.begin());
  if (k1 == 0) return slices_.front().median;
  const auto& a = slices_[k1 - 1];
  const auto& b = *it;
  const double th = (t - a.t) / (b.t - a.t);
  return (1.0 - th) * a.median + th * b.median;
}

double level_position(const FkppTable& table, double t, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("level position needs eps in (0,1)");
  const auto& sl = table.slices()[table.slice_index(t)];
  const double m = find_level(sl.u, sl.x0, table.dx(), eps);
  if (std::isnan(m)) throw DomainError("level " + std::to_string(eps) + " not attained on the grid");
  return m;
}

double WaveProfile::at(double x) const {
  const double pos = (x - x_lo) / dx;
  if (pos < 0.0) return 0.0;
  const double last = static_cast<double>(w.size() - 1);
  if (pos >= last) return 1.0;
  const auto i = static_cast<std::size_t>(pos);
  const double f = pos - static_cast<double>(i);
  return w[i] + f * (w[i + 1] - w[i]);
}

double WaveProfile::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile needs p in (0,1)");
  const auto it = std::upper_bound(w.begin(), w.end(), p);
  if (it == w.begin()) throw DomainError("quantile below the resolved profile");
  if (it == w.end()) throw DomainError("quantile above the resolved profile");
  const auto i = static_cast<std::size_t>(it - w.begin()) - 1;
  const double a = w[i], b = w[i + 1];
  double f;
  if (a > 0.0 && b < 0.5) f = std::log(p / a) / std::log(b / a);
  else f = b > a ? (p - a) / (b - a) : 0.0;
  return x_lo + (static_cast<double>(i) + f) * dx;
}

WaveProfile wave_profile(const FkppTable& table, double t, double half_range) {
  const auto k = table.slice_index(t);
  const double m = level_position(table, t, 0.5);
  WaveProfile w;
  w.t = t;
  w.dx = table.dx();
  const auto j = static_cast<long>(std::floor(half_range / w.dx));
  w.x_lo = -static_cast<double>(j) * w.dx;
  w.w.reserve(static_cast<std::size_t>(2 * j + 1));
  for (long i = -j; i <= j; ++i) {
    const double x = static_cast<double>(i) * w.dx;
    w.w.push_back(i == 0 ? 0.5 : std::clamp(table.slice_value(k, m + x), 0.0, 1.0));
  }
  for (std::size_t i = 1; i < w.w.size(); ++i) w.w[i] = std::max(w.w[i], w.w[i - 1]);
  return w;
}

namespace {

TailFit fit_ratio(const WaveProfile& w, double lo, double hi, double threshold, bool with_abs) {
  if (!(lo < hi) || hi > 0.0) throw ConfigError("tail fit window must lie in x < 0");
  if (w.x_lo > lo) throw QueryError("profile not resolved down to the tail window");
  TailFit f;
  f.lo = lo;
  f.hi = hi;
  std::vector<double> xs, ratio, ys;
  for (std::size_t i = 0; i < w.w.size(); ++i) {
    const double x = w.x_lo + static_cast<double>(i) * w.dx;
    if (x < lo - 1e-9 || x > hi + 1e-9) continue;
    xs.push_back(x);
    const double scale = with_abs ? std::abs(x) * std::exp(x) : std::exp(x);
    ratio.push_back(w.w[i] / scale);
    ys.push_back(w.w[i] * std::exp(-x));
  }
  if (xs.size() < 3) throw QueryError("tail window contains fewer than 3 grid points");
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double r : ratio) mean += r;
  mean /= n;
  double ss = 0.0;
  for (double r : ratio) ss += (r - mean) * (r - mean);
  const auto [mn, mx] = std::minmax_element(ratio.begin(), ratio.end());
  f.c = mean;
  f.residual = std::sqrt(ss / n) / mean;
  f.variation = (*mx - *mn) / mean;
  f.flagged = f.residual > threshold;
  // Affine fit y = C |x| + D.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double a = std::abs(xs[i]);
    sx += a;
    sy += ys[i];
    sxx += a * a;
    sxy += a * ys[i];
  }
  const double det = n * sxx - sx * sx;
  f.affine_c = (n * sxy - sx * sy) / det;
  f.affine_d = (sy - f.affine_c * sx) / n;
  double rss = 0.0, ybar = sy / n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (f.affine_c * std::abs(xs[i]) + f.affine_d);
    rss += e * e;
  }
  f.affine_residual = std::sqrt(rss / n) / ybar;
  return f;
}

}  // namespace

TailFit tail_constant(const WaveProfile& w, double lo, double hi, double residual_threshold) {
  return fit_ratio(w, lo, hi, residual_threshold, true);
}

TailFit tail_constant_exponential(const WaveProfile& w, double lo, double hi) {
  return fit_ratio(w, lo, hi, 0.05, false);
}

CenteringFit fit_centering(const FkppTable& table, double t_min, double t_max) {
  double s1 = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::vector<std::pair<double, double>> pts;
  for (const auto& sl : table.slices()) {
    if (sl.t < t_min - 1e-9 || sl.t > t_max + 1e-9 || sl.t <= 0.0) continue;
    const double x = 1.0 / std::sqrt(sl.t);
    const double y = sl.median - 1.5 * std::log(sl.t);
    pts.emplace_back(x, y);
    s1 += 1.0;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  if (pts.size() < 3) throw QueryError("centering fit needs at least 3 stored times");
  CenteringFit f;
  const double det = s1 * sxx - sx * sx;
  f.slope = (s1 * sxy - sx * sy) / det;
  f.c_b = (sy - f.slope * sx) / s1;
  double rss = 0.0;
  for (auto [x, y] : pts) rss += (y - f.c_b - f.slope * x) * (y - f.c_b - f.slope * x);
  f.residual = std::sqrt(rss / s1);
  f.t_min = t_min;
  f.t_max = t_max;
  return f;
}

}  // namespace bbm
