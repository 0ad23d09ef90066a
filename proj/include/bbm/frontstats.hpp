#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bbm/engine.hpp"
#include "bbm/point_measure.hpp"

namespace bbm {

// M_t = sum e^{-X_i(t)}. With include_pruned the mass carried by pruned
// particles is added back, which keeps the expectation exact.
double additive_martingale(const PopulationSnapshot& s, bool include_pruned = false);

// Z(t) = sum X_i(t) e^{-X_i(t)}, same convention for pruned mass.
double derivative_martingale(const PopulationSnapshot& s, bool include_pruned = false);

// m_t = 1.5 log t + C_B.
double front_center(double t, double c_b);

enum class Recentering {
  kBar,    // shift by -m_t + log(C Z) with an externally supplied Z
  kHat,    // shift by -m_t + log(C Z(t)) using the snapshot's own Z(t)
  kPrime,  // shift by -X_1(t)
};

struct RecenterSpec {
  Recentering mode = Recentering::kHat;
  double c = 1.0;
  double c_b = 0.0;
  std::optional<double> z;  // required for kBar
  bool include_pruned = true;
};

PointMeasure recentered_measure(const PopulationSnapshot& s, const RecenterSpec& spec);

// The shift applied by recentered_measure (atom -> atom + shift).
double recentering_shift(const PopulationSnapshot& s, const RecenterSpec& spec);

struct FrontRecord {
  double t = 0.0;
  std::size_t n = 0;
  double x1 = 0.0;
  double m = 0.0;
  double z = 0.0;
  double m_t = 0.0;
  bool pruned = false;
};

FrontRecord front_record(const PopulationSnapshot& s, double c_b);

struct GumbelFit {
  double location = 0.0;
  double scale = 1.0;
  double ks = 0.0;
  double pvalue = 1.0;
  std::size_t n = 0;
};

// MLE for P(X > x) = exp(-e^{(x - loc)/scale}) (Gumbel law of minima).
GumbelFit gumbel_fit(std::span<const double> samples);

}  // namespace bbm
