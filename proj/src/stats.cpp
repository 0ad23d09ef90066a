#include "bbm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>

#include "bbm/errors.hpp"
#include "bbm/rng.hpp"

namespace bbm::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile needs p in (0,1)");
  return boost::math::quantile(boost::math::normal(), p);
}

double chi2_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), x));
}

double poisson_cdf(std::uint64_t k, double mean) {
  if (mean <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::poisson(mean), static_cast<double>(k));
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double compensated_sum(std::span<const double> xs) {
  double sum = 0.0, c = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) c += (sum - t) + x;
    else c += (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

Estimate mean_se(std::span<const double> xs) {
  Estimate e;
  e.n = xs.size();
  if (xs.empty()) return e;
  e.mean = compensated_sum(xs) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return e;
}

Estimate weighted_mean_se(std::span<const double> xs, std::span<const double> ws) {
  if (xs.size() != ws.size()) throw ConfigError("weighted mean: size mismatch");
  Estimate e;
  e.n = xs.size();
  double sw = 0.0, swx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sw += ws[i];
    swx += ws[i] * xs[i];
  }
  if (!(sw > 0.0)) throw DiagnosticsError("weighted mean: weights sum to zero");
  e.mean = swx / sw;
  double v = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = ws[i] * (xs[i] - e.mean);
    v += d * d;
  }
  e.se = std::sqrt(v) / sw;
  return e;
}

double effective_sample_size(std::span<const double> ws) {
  double s = 0.0, s2 = 0.0;
  for (double w : ws) {
    s += w;
    s2 += w * w;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

double z_score(const Estimate& a, const Estimate& b) {
  const double se = std::sqrt(a.se * a.se + b.se * b.se);
  if (se == 0.0) return a.mean == b.mean ? 0.0 : std::copysign(INFINITY, a.mean - b.mean);
  return (a.mean - b.mean) / se;
}

namespace {

double ks_pvalue(double d, double n_eff) {
  const double sn = std::sqrt(n_eff);
  return kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace

TestResult ks_one_sample(std::span<const double> xs, const std::function<double(double)>& cdf) {
  if (xs.size() < 2) throw DiagnosticsError("KS test needs at least 2 samples");
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return {d, ks_pvalue(d, n), n};
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  std::vector<double> w(b.size(), 1.0);
  auto r = ks_two_sample_weighted(a, b, w);
  return r;
}

TestResult ks_two_sample_weighted(std::span<const double> a, std::span<const double> b,
                                  std::span<const double> wb) {
  if (a.size() < 2 || b.size() < 2) throw DiagnosticsError("KS test needs at least 2 samples");
  if (wb.size() != b.size()) throw ConfigError("KS weights: size mismatch");
  std::vector<double> sa(a.begin(), a.end());
  std::sort(sa.begin(), sa.end());
  std::vector<std::size_t> idx(b.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return b[i] < b[j]; });
  double wtot = 0.0;
  for (double w : wb) wtot += w;
  if (!(wtot > 0.0)) throw DiagnosticsError("KS weights sum to zero");
  const double na = static_cast<double>(sa.size());
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, d = 0.0;
  while (i < sa.size() || j < idx.size()) {
    double x;
    if (j >= idx.size() || (i < sa.size() && sa[i] <= b[idx[j]])) x = sa[i];
    else x = b[idx[j]];
    while (i < sa.size() && sa[i] == x) {
      fa += 1.0 / na;
      ++i;
    }
    while (j < idx.size() && b[idx[j]] == x) {
      fb += wb[idx[j]] / wtot;
      ++j;
    }
    d = std::max(d, std::abs(fa - fb));
  }
  const double nb = effective_sample_size(wb);
  const double ne = na * nb / (na + nb);
  return {d, ks_pvalue(d, ne), ne};
}

TestResult dispersion_test(std::span<const double> counts) {
  if (counts.size() < 20) throw DiagnosticsError("dispersion test needs at least 20 counts");
  const auto e = mean_se(counts);
  if (!(e.mean > 0.0)) throw DiagnosticsError("dispersion test: all counts are zero");
  const double n = static_cast<double>(counts.size());
  const double var = e.se * e.se * n;
  const double index = var / e.mean;
  const double stat = (n - 1.0) * index;
  const double sf = chi2_sf(stat, n - 1.0);
  const double p = std::min(1.0, 2.0 * std::min(sf, 1.0 - sf));
  return {index, p, n};
}

namespace {

// Pool adjacent cells left to right until each expected count reaches the
// threshold; a short last cell is merged into its neighbour.
std::vector<std::pair<std::size_t, std::size_t>> pool_cells(std::span<const double> expected,
                                                            double min_expected) {
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  std::size_t start = 0;
  double acc = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    acc += expected[i];
    if (acc >= min_expected) {
      cells.emplace_back(start, i + 1);
      start = i + 1;
      acc = 0.0;
    }
  }
  if (start < expected.size()) {
    if (cells.empty()) cells.emplace_back(start, expected.size());
    else cells.back().second = expected.size();
  }
  return cells;
}

}  // namespace

TestResult chi_square_gof(std::span<const double> observed, std::span<const double> probs,
                          double min_expected) {
  if (observed.size() != probs.size()) throw ConfigError("chi-square: size mismatch");
  const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
  std::vector<double> expected(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) expected[i] = n * probs[i];
  const auto cells = pool_cells(expected, min_expected);
  if (cells.size() < 2) throw DiagnosticsError("chi-square: fewer than two usable cells");
  double stat = 0.0;
  for (auto [lo, hi] : cells) {
    double o = 0.0, e = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      o += observed[i];
      e += expected[i];
    }
    stat += (o - e) * (o - e) / e;
  }
  const double dof = static_cast<double>(cells.size() - 1);
  return {stat, chi2_sf(stat, dof), n};
}

TestResult chi_square_two_sample(std::span<const double> a, std::span<const double> b,
                                 std::span<const double> wb, double min_expected) {
  if (a.empty() || b.empty()) throw DiagnosticsError("chi-square: empty sample");
  std::vector<double> w(b.size(), 1.0);
  if (!wb.empty()) {
    if (wb.size() != b.size()) throw ConfigError("chi-square weights: size mismatch");
    w.assign(wb.begin(), wb.end());
  }
  double kmax = 0.0;
  for (double x : a) kmax = std::max(kmax, x);
  for (double x : b) kmax = std::max(kmax, x);
  const auto k = static_cast<std::size_t>(kmax) + 1;
  std::vector<double> ca(k, 0.0), cb(k, 0.0);
  for (double x : a) ca[static_cast<std::size_t>(x)] += 1.0;
  double wtot = 0.0;
  for (double x : w) wtot += x;
  const double nb = effective_sample_size(w);
  for (std::size_t i = 0; i < b.size(); ++i) cb[static_cast<std::size_t>(b[i])] += w[i] * nb / wtot;
  const double na = static_cast<double>(a.size());
  std::vector<double> expected_min(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double pooled = (ca[i] + cb[i]) / (na + nb);
    expected_min[i] = pooled * std::min(na, nb);
  }
  const auto cells = pool_cells(expected_min, min_expected);
  if (cells.size() < 2) return {0.0, 1.0, nb};
  double stat = 0.0;
  for (auto [lo, hi] : cells) {
    double oa = 0.0, ob = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      oa += ca[i];
      ob += cb[i];
    }
    const double p = (oa + ob) / (na + nb);
    const double ea = p * na, eb = p * nb;
    stat += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
  }
  const double dof = static_cast<double>(cells.size() - 1);
  return {stat, chi2_sf(stat, dof), nb};
}

Estimate pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw DiagnosticsError("pearson: bad sizes");
  const auto mx = mean_se(x).mean, my = mean_se(y).mean;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DiagnosticsError("pearson: constant input");
  const double r = sxy / std::sqrt(sxx * syy);
  return {r, (1.0 - r * r) / std::sqrt(static_cast<double>(x.size()) - 1.0), x.size()};
}

// Port of the classical Hartigan & Hartigan (1985) algorithm: alternate the
// greatest convex minorant and least concave majorant of the empirical CDF.
double dip_statistic(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const auto n = static_cast<long>(x.size());
  if (n < 4 || x.front() == x.back()) return 0.0;
  std::vector<long> mn(n), mj(n);
  mn[0] = 0;
  for (long j = 1; j < n; ++j) {
    mn[j] = j - 1;
    for (;;) {
      const long mnj = mn[j], mnmnj = mn[mnj];
      if (mnj == 0 || (x[j] - x[mnj]) * (mnj - mnmnj) < (x[mnj] - x[mnmnj]) * (j - mnj)) break;
      mn[j] = mnmnj;
    }
  }
  mj[n - 1] = n - 1;
  for (long k = n - 2; k >= 0; --k) {
    mj[k] = k + 1;
    for (;;) {
      const long mjk = mj[k], mjmjk = mj[mjk];
      if (mjk == n - 1 || (x[k] - x[mjk]) * (mjk - mjmjk) < (x[mjk] - x[mjmjk]) * (k - mjk)) break;
      mj[k] = mjmjk;
    }
  }
  long low = 0, high = n - 1;
  double dip = 1.0;
  std::vector<long> gcm, lcm;
  for (;;) {
    gcm.assign(1, high);
    while (gcm.back() > low) gcm.push_back(mn[gcm.back()]);
    const long l_gcm = static_cast<long>(gcm.size()) - 1;
    lcm.assign(1, low);
    while (lcm.back() < high) lcm.push_back(mj[lcm.back()]);
    const long l_lcm = static_cast<long>(lcm.size()) - 1;
    long ig = l_gcm, ix = l_gcm - 1, ih = l_lcm, iv = 1;
    double d = 0.0;
    if (l_gcm != 1 || l_lcm != 1) {
      for (;;) {
        const long gcmix = gcm[ix], lcmiv = lcm[iv];
        if (gcmix > lcmiv) {
          const long gcmil = gcm[ix + 1];
          const double dx = static_cast<double>(lcmiv - gcmil + 1) -
                            (x[lcmiv] - x[gcmil]) * static_cast<double>(gcmix - gcmil) /
                                (x[gcmix] - x[gcmil]);
          ++iv;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iv - 1;
          }
        } else {
          const long lcmivl = lcm[iv - 1];
          const double dx = (x[gcmix] - x[lcmivl]) * static_cast<double>(lcmiv - lcmivl) /
                                (x[lcmiv] - x[lcmivl]) -
                            static_cast<double>(gcmix - lcmivl - 1);
          --ix;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iv;
          }
        }
        if (ix < 0) ix = 0;
        if (iv > l_lcm) iv = l_lcm;
        if (gcm[ix] == lcm[iv]) break;
      }
    } else {
      d = 1.0;
    }
    if (d < dip) break;
    double dip_l = 0.0;
    for (long j = ig; j < l_gcm; ++j) {
      double max_t = 1.0;
      const long jb = gcm[j + 1], je = gcm[j];
      if (je - jb > 1 && x[je] != x[jb]) {
        const double c = static_cast<double>(je - jb) / (x[je] - x[jb]);
        for (long jj = jb; jj <= je; ++jj) {
          const double t = static_cast<double>(jj - jb + 1) - (x[jj] - x[jb]) * c;
          max_t = std::max(max_t, t);
        }
      }
      dip_l = std::max(dip_l, max_t);
    }
    double dip_u = 0.0;
    for (long j = ih; j < l_lcm; ++j) {
      double max_t = 1.0;
      const long jb = lcm[j], je = lcm[j + 1];
      if (je - jb > 1 && x[je] != x[jb]) {
        const double c = static_cast<double>(je - jb) / (x[je] - x[jb]);
        for (long jj = jb; jj <= je; ++jj) {
          const double t = (x[jj] - x[jb]) * c - static_cast<double>(jj - jb - 1);
          max_t = std::max(max_t, t);
        }
      }
      dip_u = std::max(dip_u, max_t);
    }
    dip = std::max(dip, std::max(dip_l, dip_u));
    if (low == gcm[ig] && high == lcm[ih]) break;
    low = gcm[ig];
    high = lcm[ih];
  }
  return dip / (2.0 * static_cast<double>(n));
}

TestResult dip_test(std::span<const double> xs, std::size_t reps, std::uint64_t seed) {
  const double d = dip_statistic(std::vector<double>(xs.begin(), xs.end()));
  std::size_t exceed = 0;
  std::vector<double> u(xs.size());
  for (std::size_t r = 0; r < reps; ++r) {
    Stream s(seed, r, Purpose::kAux);
    for (auto& v : u) v = s.uniform();
    if (dip_statistic(u) >= d) ++exceed;
  }
  const double p = (static_cast<double>(exceed) + 1.0) / (static_cast<double>(reps) + 1.0);
  return {d, p, static_cast<double>(xs.size())};
}

TestResult sign_test(std::span<const double> diffs) {
  std::size_t pos = 0, neg = 0;
  for (double d : diffs) {
    if (d > 0) ++pos;
    else if (d < 0) ++neg;
  }
  const std::size_t n = pos + neg;
  if (n == 0) return {0.0, 1.0, 0.0};
  // Exact binomial tail via normal approximation with continuity correction
  // for n > 50, exact sum otherwise.
  const double k = static_cast<double>(std::min(pos, neg));
  double p;
  if (n > 50) {
    const double z = (k + 0.5 - 0.5 * static_cast<double>(n)) / (0.5 * std::sqrt(static_cast<double>(n)));
    p = 2.0 * normal_cdf(z);
  } else {
    double tail = 0.0, c = 1.0;
    for (std::size_t i = 0; i <= static_cast<std::size_t>(k); ++i) {
      if (i > 0) c = c * static_cast<double>(n - i + 1) / static_cast<double>(i);
      tail += c;
    }
    p = 2.0 * tail * std::pow(0.5, static_cast<double>(n));
  }
  return {static_cast<double>(pos) - static_cast<double>(neg), std::min(1.0, p),
          static_cast<double>(n)};
}

}  // namespace bbm::stats
