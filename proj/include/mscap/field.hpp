#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mscap/grid.hpp"

namespace mscap {

/// Real values on the nodes of one GridDomain. EXTERIOR nodes hold NaN.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridPtr grid, double fill = 0.0);
  ScalarField(GridPtr grid, std::vector<double> values);

  /// Samples f at every non-EXTERIOR node.
  static ScalarField sample(GridPtr grid, const std::function<double(const Point&)>& f);

  const GridDomain& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }

  /// Throws DOMAIN_MISMATCH unless both fields live on the same grid.
  void require_same_grid(const ScalarField& other) const;

  /// a*this + b*other
  ScalarField combine(double a, const ScalarField& other, double b) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// Sum of f(node) * h^{2n} over the selected nodes.
double integrate(const ScalarField& f, const NodeMask& selection);
double integrate(const ScalarField& f, Region region);

}  // namespace mscap
