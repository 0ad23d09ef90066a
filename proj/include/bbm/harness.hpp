#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bbm/decoration.hpp"
#include "bbm/engine.hpp"
#include "bbm/fkpp.hpp"
#include "bbm/point_measure.hpp"
#include "bbm/stats.hpp"

namespace bbm {

struct Verdict {
  std::string name;
  bool pass = false;
  std::string rule;  // the declared tolerance, in words
  bool gating = true;  // diagnostics are reported but do not decide pass/fail
};

struct ExperimentReport {
  std::string name;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json stats = nlohmann::json::object();
  std::vector<Verdict> verdicts;
  // Per-replica raw values, written as companion CSV columns.
  std::map<std::string, std::vector<double>> raw;

  bool passed() const;
  void estimate(const std::string& key, const stats::Estimate& e);
  void exact(const std::string& key, double value);
  void test(const std::string& key, const stats::TestResult& r);
  void check(const std::string& name, bool pass, const std::string& rule, bool gating = true);
  // Records |z| < limit as a verdict and the z-score under stats[name].
  void z_check(const std::string& name, double z, double limit = 3.0, bool gating = true);
  nlohmann::json to_json() const;
};

// Runs f(i) for i in [0, n) on worker threads; results must be written to
// per-index slots so reductions stay order independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f, unsigned threads = 0);

struct ManyToOneConfig {
  ModelParams params;
  double t = 3.0;
  std::size_t replicas = 10'000;
  std::uint64_t seed = 1;
};

// E[M_t] = 1, E[Z(t)] = 0 and E[#{X_i >= a}] = e^t P(sigma B_t + rho t >= a)
// at a = rho t + sigma sqrt(t) * {-1, 0, 1}.
ExperimentReport many_to_one_check(const ManyToOneConfig& cfg);

struct PdeSimConfig {
  double t = 3.0;
  std::size_t replicas = 10'000;
  std::uint64_t seed = 2;
};

// Empirical law of X_1(t) against G_t from the table (one-sample KS).
ExperimentReport pde_simulation_check(const PdeSimConfig& cfg, const FkppTable& table);

struct SpinalConfig {
  double t = 2.0;
  std::optional<double> barrier = -5.0;  // F = 1{min over check grid >= barrier}; none: F = 1
  double check_step = 0.01;
  double path_dt = 1e-3;
  std::size_t lhs_runs = 100'000;
  std::size_t rhs_paths = 100'000;
  // Branch weight f = 1_{[0, zeta]}; absent means f = 0.
  std::optional<double> zeta;
  std::vector<double> alpha;
  std::vector<Interval> sets;
  std::size_t kernel_runs = 400;
  std::size_t batches = 8;  // RHS batches, each with its own kernel table when zeta is set
  std::uint64_t seed = 3;
};

// Both sides of the spinal identity; the table must reach t with dense
// slices (dt equal to path_dt is recommended).
ExperimentReport spinal_identity_check(const SpinalConfig& cfg, const FkppTable& table);

struct FirstPassageConfig {
  double b = 1.0;
  double dt = 1e-3;
  double horizon = 30.0;
  std::size_t samples = 10'000;
  std::uint64_t seed = 4;
};

// Law of T_b from the Gamma sampler against 2(1 - Phi(b / sqrt(t))),
// conditioned on T_b <= horizon; also checks sup Gamma = b pathwise.
ExperimentReport first_passage_check(const FirstPassageConfig& cfg);

struct ThinningConfig {
  YConfig y;
  DecorationConfig decoration;
  std::size_t candidates = 10'000;
  int bins = 5;
  std::uint64_t seed = 5;
};

// Per-birth acceptance frequency against 1 - G_s(-Y(s)) in time bins.
ExperimentReport thinning_check(const ThinningConfig& cfg, const FkppTable& table);

struct GapConfig {
  double t = 20.0;
  double eta = 2.0;
  double m_t = 0.0;  // centre of J_eta
  std::vector<double> zetas{1.0, 2.0, 4.0};
  std::size_t replicas = 1000;
  PruneConfig prune{true, 10.0, 50'000'000};
  std::size_t dip_reps = 200;
  std::size_t max_pairs = 5000;  // tau samples kept for the dip test
  std::uint64_t seed = 6;
};

ExperimentReport genealogy_gap(const GapConfig& cfg);

struct RecordConfig {
  double k = 10.0;
  std::size_t replicas = 1000;
  double c = 1.0;            // tail constant used in log C
  double top = 3.0;          // atoms above this are never generated
  std::uint64_t cap = 50'000'000;
  std::uint64_t seed = 7;
};

// Surrogate P*_{k,inf}: W(u) + log H_k + log log H_k + log C over the
// stopping line, tested against PPP(e^x dx).
ExperimentReport record_poissonization(const RecordConfig& cfg, const WaveProfile& w);

struct ShiftConfig {
  std::vector<double> ks{8.0, 10.0, 12.0};
  std::size_t replicas = 200;
  std::uint64_t cap = 50'000'000;
  std::uint64_t seed = 8;
};

// Median of log H_k + log log H_k - (k + log Z_k) per k; |median| must shrink.
ExperimentReport shift_consistency(const ShiftConfig& cfg);

struct DecorationCompareConfig {
  std::vector<double> ts{10.0, 20.0};
  double zeta = 1.0;
  double s = 1.0;  // time at which the law of Y is compared
  std::vector<double> m_t;  // centring per t (same length as ts)
  std::size_t replicas = 500;
  std::size_t sampler_draws = 2000;
  YConfig y;
  DecorationConfig decoration;
  std::vector<Interval> count_sets{{0.0, 1.0}, {0.0, 2.0}};
  std::uint64_t seed = 9;
};

ExperimentReport decoration_comparison(const DecorationCompareConfig& cfg, const FkppTable& table);

struct ExtremalConfig {
  double t = 20.0;
  double rerun_t = 30.0;
  Interval window{-1.0, 1.0};
  double c = 1.0;
  double m_t = 0.0;       // centring at t
  double m_rerun = 0.0;   // centring at rerun_t
  std::size_t replicas = 1000;
  std::size_t limit_draws = 1000;
  std::size_t pool_weighted = 2000;  // weighted decorations before resampling
  std::size_t pool_size = 2000;
  PruneConfig prune{true, 10.0, 50'000'000};
  YConfig y;
  DecorationConfig decoration;
  std::vector<double> alphas{1.0, 0.5, 1.0};
  std::vector<Interval> sets{{-1.0, 1.0}, {-1.0, 0.0}, {0.0, 1.0}};
  std::uint64_t seed = 10;
};

// Counts and Laplace functionals of the recentred extremal measure on a
// window against the decorated PPP sampler. A chi-square p in [0.001, 0.01)
// at t triggers a rerun at rerun_t; both outcomes are reported.
ExperimentReport extremal_comparison(const ExtremalConfig& cfg, const FkppTable& table);

struct LaplaceConfig {
  std::vector<double> alpha{1.0};
  std::vector<Interval> sets{{0.0, 2.0}};
  std::size_t direct_draws = 10'000;
  std::size_t ratio_draws = 10'000;
  YConfig y;
  DecorationConfig decoration;
  std::size_t kernel_runs = 400;
  std::size_t batches = 8;
  std::uint64_t seed = 11;
};

// Direct E[exp(-sum alpha_j Q(A_j))] against the ratio of Gamma-path
// integrals with G* = G + Delta. The ratio formula counts Q without its atom
// at 0, so it is multiplied by exp(-sum alpha_j delta_0(A_j)).
ExperimentReport laplace_ratio_check(const LaplaceConfig& cfg, const FkppTable& table);

struct FrontConfig {
  double early_lo = 10.0, early_hi = 20.0;
  double late_lo = 40.0, late_hi = 80.0;
  double tail_lo = -8.0, tail_hi = -4.0;
  double tail_tolerance = 0.10;
};

// m_t(1/2) - 1.5 log t variation on two time windows, and the tail ratio
// w(x) / (|x| e^x) on the converged profile at the table horizon.
ExperimentReport centering_check(const FrontConfig& cfg, const FkppTable& table);
ExperimentReport tail_check(const FrontConfig& cfg, const FkppTable& table);

// Exact invariants of the modules (determinism, partitions, monotonicity,
// minimum atoms, PPP void probabilities at fixed seeds).
ExperimentReport property_suite(std::uint64_t seed);

}  // namespace bbm
