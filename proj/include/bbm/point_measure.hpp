#pragma once

#include <span>
#include <vector>

namespace bbm {

struct Interval {
  double lo;
  double hi;  // closed interval [lo, hi]
};

// Finite multiset of real atoms kept sorted.
class PointMeasure {
 public:
  PointMeasure() = default;
  explicit PointMeasure(std::vector<double> atoms);

  const std::vector<double>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  double min() const;  // QueryError when empty

  std::size_t count(Interval a) const;
  PointMeasure shifted(double by) const;
  PointMeasure restricted(Interval a) const;
  PointMeasure superposed(const PointMeasure& other) const;
  void add(double x);
  void add_all(const PointMeasure& other, double shift = 0.0);

 private:
  std::vector<double> atoms_;
};

// exp(-sum_j alpha_j * measure(A_j)); alpha_j >= 0 required.
double laplace_functional(const PointMeasure& m, std::span<const double> alpha,
                          std::span<const Interval> sets);

}  // namespace bbm
