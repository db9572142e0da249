#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "mscap/expression.hpp"
#include "mscap/field.hpp"
#include "mscap/grid.hpp"

namespace mscap {

/// Problem statement: condenser (K, D), class m, weight psi on K and level delta.
struct CondenserSpec {
  Geometry geometry;
  int m = 1;
  Expression psi = Expression::constant(-1.0);
  double delta = 0.0;

  int n() const { return geometry.n; }
  /// Operator order p = n - m + 1.
  int p() const { return geometry.n - m + 1; }

  /// Structural checks that need no grid (ranges of n, m, shapes).
  void validate() const;

  nlohmann::json to_json() const;
  bool operator==(const CondenserSpec&) const = default;
};

/// Radius of the wide stencil used for a given (n, p): 2 for the Monge-Ampere
/// branch, 1 otherwise.
int default_stencil_radius(int n, int p);

/// A condenser rasterized on a grid, with psi evaluated on the K nodes.
class Condenser {
 public:
  struct Options {
    double h = 1.0 / 64;
    int stencil_radius = 0;  ///< 0 picks default_stencil_radius
    /// Accept delta == sup psi (the degenerate constant-envelope case).
    bool allow_degenerate = false;
  };

  /// Throws CONSTRAINT_ERROR when psi cannot be evaluated at a K node and
  /// INFEASIBLE when delta <= sup_K psi.
  Condenser(CondenserSpec spec, const Options& opt);
  Condenser(CondenserSpec spec, double h) : Condenser(std::move(spec), Options{h}) {}

  const CondenserSpec& spec() const { return spec_; }
  const GridDomain& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int p() const { return spec_.p(); }
  double delta() const { return spec_.delta; }

  /// psi at K nodes, NaN elsewhere.
  const ScalarField& psi_nodes() const { return psi_; }
  double psi_sup() const { return psi_sup_; }
  double psi_min() const { return psi_min_; }
  /// Guarded evaluation of the weight (or its analytic extension) at any point.
  double psi_at(const Point& x) const;

 private:
  CondenserSpec spec_;
  GridPtr grid_;
  ScalarField psi_;
  double psi_sup_ = 0.0;
  double psi_min_ = 0.0;
};

}  // namespace mscap
