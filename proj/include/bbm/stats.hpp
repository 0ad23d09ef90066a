#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace bbm::stats {

struct TestResult {
  double statistic = 0.0;
  double pvalue = 1.0;
  double n = 0.0;  // sample size (effective size for weighted tests)
};

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

double normal_cdf(double x);
double normal_quantile(double p);
double chi2_sf(double x, double dof);
double poisson_cdf(std::uint64_t k, double mean);

// Survival function of the Kolmogorov distribution, Q(lambda).
double kolmogorov_sf(double lambda);

// Neumaier-compensated sum.
double compensated_sum(std::span<const double> xs);

Estimate mean_se(std::span<const double> xs);

// Self-normalised weighted mean sum(w x)/sum(w) with a delta-method SE.
Estimate weighted_mean_se(std::span<const double> xs, std::span<const double> ws);

// Kish effective sample size (sum w)^2 / sum w^2.
double effective_sample_size(std::span<const double> ws);

// z-score of the difference of two independent estimates.
double z_score(const Estimate& a, const Estimate& b);

// One-sample KS against a continuous CDF. Samples are not modified.
TestResult ks_one_sample(std::span<const double> xs, const std::function<double(double)>& cdf);

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Two-sample KS where the second sample carries importance weights; the
// effective size replaces n_b in the asymptotic p-value.
TestResult ks_two_sample_weighted(std::span<const double> a, std::span<const double> b,
                                  std::span<const double> wb);

// Index of dispersion var/mean; statistic (n-1) var/mean is chi-square(n-1)
// under the Poisson null; two-sided p-value.
TestResult dispersion_test(std::span<const double> counts);

// Chi-square goodness of fit with expected probabilities; adjacent cells are
// pooled until each has expected count >= min_expected.
TestResult chi_square_gof(std::span<const double> observed, std::span<const double> probs,
                          double min_expected = 5.0);

// Two-sample chi-square homogeneity test on integer-valued counts. The second
// sample may be weighted (weights scaled to its effective size).
TestResult chi_square_two_sample(std::span<const double> a, std::span<const double> b,
                                 std::span<const double> wb = {}, double min_expected = 5.0);

// Pearson correlation with its asymptotic SE (1 - r^2)/sqrt(n - 1).
Estimate pearson(std::span<const double> x, std::span<const double> y);

// Hartigan's dip statistic of the sample's empirical distribution.
double dip_statistic(std::vector<double> xs);

// Dip test p-value by Monte Carlo calibration against uniform samples of the
// same size.
TestResult dip_test(std::span<const double> xs, std::size_t reps, std::uint64_t seed);

// Sign test p-value (two-sided, ties dropped) for paired differences.
TestResult sign_test(std::span<const double> diffs);

}  // namespace bbm::stats
