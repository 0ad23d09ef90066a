#include "bbm/point_measure.hpp"

#include <algorithm>
#include <cmath>

#include "bbm/errors.hpp"

namespace bbm {

PointMeasure::PointMeasure(std::vector<double> atoms) : atoms_(std::move(atoms)) {
  for (double x : atoms_) {
    if (!std::isfinite(x)) throw NumericError("point measure atoms must be finite");
  }
  std::sort(atoms_.begin(), atoms_.end());
}

double PointMeasure::min() const {
  if (atoms_.empty()) throw QueryError("empty point measure has no minimum");
  return atoms_.front();
}

std::size_t PointMeasure::count(Interval a) const {
  if (a.hi < a.lo) return 0;
  const auto lo = std::lower_bound(atoms_.begin(), atoms_.end(), a.lo);
  const auto hi = std::upper_bound(lo, atoms_.end(), a.hi);
  return static_cast<std::size_t>(hi - lo);
}

PointMeasure PointMeasure::shifted(double by) const {
  PointMeasure out;
  out.atoms_.reserve(atoms_.size());
  for (double x : atoms_) out.atoms_.push_back(x + by);
  return out;
}

PointMeasure PointMeasure::restricted(Interval a) const {
  PointMeasure out;
  if (a.hi < a.lo) return out;
  const auto lo = std::lower_bound(atoms_.begin(), atoms_.end(), a.lo);
  const auto hi = std::upper_bound(lo, atoms_.end(), a.hi);
  out.atoms_.assign(lo, hi);
  return out;
}

PointMeasure PointMeasure::superposed(const PointMeasure& other) const {
  PointMeasure out;
  out.atoms_.resize(atoms_.size() + other.atoms_.size());
  std::merge(atoms_.begin(), atoms_.end(), other.atoms_.begin(), other.atoms_.end(),
             out.atoms_.begin());
  return out;
}

void PointMeasure::add(double x) {
  if (!std::isfinite(x)) throw NumericError("point measure atoms must be finite");
  atoms_.insert(std::upper_bound(atoms_.begin(), atoms_.end(), x), x);
}

void PointMeasure::add_all(const PointMeasure& other, double shift) {
  const auto mid = atoms_.size();
  for (double x : other.atoms_) atoms_.push_back(x + shift);
  std::inplace_merge(atoms_.begin(), atoms_.begin() + static_cast<std::ptrdiff_t>(mid),
                     atoms_.end());
}

double laplace_functional(const PointMeasure& m, std::span<const double> alpha,
                          std::span<const Interval> sets) {
  if (alpha.size() != sets.size()) throw ConfigError("laplace functional: size mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (!(alpha[j] >= 0.0)) throw ConfigError("laplace functional: weights must be >= 0");
    if (alpha[j] > 0.0) s += alpha[j] * static_cast<double>(m.count(sets[j]));
  }
  return std::exp(-s);
}

}  // namespace bbm
