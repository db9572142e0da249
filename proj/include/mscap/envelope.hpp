#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "mscap/condenser.hpp"
#include "mscap/field.hpp"
#include "mscap/hessian.hpp"

namespace mscap {

struct SolverOptions {
  double h = 1.0 / 64;
  /// Converged when the largest nodal change of a sweep is below epsilon * h^2.
  double epsilon = 1e-10;
  /// 0 picks 1e5 sweeps for n = 1 and 1e4 for n = 2.
  long max_sweeps = 0;
  /// Over-relaxation factor in (0, 2); 0 picks a factor from h and the size of D.
  /// 1 is plain Gauss-Seidel.
  double relaxation = 0.0;
  /// Boundary-fitted (Shortley-Weller) weights at free nodes next to K.
  bool fit_compact = true;
  /// Boundary-fitted weights next to the complement of D: -1 automatic
  /// (on for p >= 2), 0 off, 1 on.
  int fit_domain = -1;
  int stencil_radius = 0;  ///< 0: default for (n, p)
  bool allow_degenerate = false;

  Condenser::Options condenser_options() const { return {h, stencil_radius, allow_degenerate}; }
};

/// Direction groups and boundary-fitted weights of the monotone scheme on one grid.
///
/// The update at a node is the largest value keeping every group's weighted
/// second difference nonnegative: for p = 1 one group of axis neighbours
/// (discrete Laplacian), for p = 2 one group per lattice complex line
/// spanned by xi and i*xi (Laplacian restricted to the line).
class StencilPlan {
 public:
  StencilPlan(const Condenser& c, bool fit_compact, bool fit_domain);

  int groups() const { return groups_; }
  /// Integer offsets of group g; entries 2j and 2j+1 are opposite points.
  std::vector<MultiIndex> group_offsets(int g) const;
  std::size_t active_count() const { return nodes_.size(); }
  std::size_t fitted_node_count() const { return fitted_nodes_; }

  /// Local maximal value at flat node i for the field u (min over groups of
  /// weighted averages), ignoring the obstacle.
  double candidate(const std::vector<double>& u, std::size_t i) const;

 private:
  friend class EnvelopeSolver;

  // A point pair (2j, 2j+1) of a group whose weights were refitted:
  // contribution num += c0*u0 + c1*u1 + add, den += den.
  struct FittedPair {
    std::uint16_t pair;  ///< group * (points per group / 2) + j
    double c0, c1, add, den;
  };

  double candidate_at(const double* u, std::size_t q) const;

  int groups_ = 0;
  int per_group_ = 0;
  double inv_per_group_ = 1.0;
  std::vector<MultiIndex> dirs_;
  std::vector<std::ptrdiff_t> offs_;
  std::vector<std::size_t> nodes_;      ///< active nodes, lexicographic
  std::vector<double> psi_;             ///< +inf at free nodes
  std::vector<std::uint32_t> fit_begin_;  ///< per node into fitted_, size nodes + 1
  std::vector<FittedPair> fitted_;
  std::vector<std::int32_t> position_;  ///< flat index -> position in nodes_, -1 if inactive
  std::size_t fitted_nodes_ = 0;
  double boundary_value_ = 0.0;
};

struct EnvelopeSolution {
  std::shared_ptr<const Condenser> condenser;
  std::shared_ptr<const StencilPlan> plan;
  ScalarField omega;
  long iterations = 0;
  double final_update = 0.0;
  double relaxation = 1.0;
  double seconds = 0.0;
  NodeMask obstacle_active;
  double maximality_residual = 0.0;
  double boundary_residual = 0.0;
};

/// Discrete Perron envelope. Throws INFEASIBLE when delta <= sup_K psi and
/// NO_CONVERGENCE when the sweep budget runs out.
/// With `initial` the sweeps start from that field and default to plain Gauss-Seidel.
EnvelopeSolution solve_envelope(std::shared_ptr<const Condenser> c, const SolverOptions& opt,
                                const ScalarField* initial = nullptr);
EnvelopeSolution solve_envelope(const CondenserSpec& spec, const SolverOptions& opt);

struct RegularityReport {
  ScalarField gap;  ///< on K nodes, NaN elsewhere
  double max_gap = 0.0;
  double tol = 0.0;
  bool regular = true;
  std::vector<std::size_t> failing;
};

/// Gap at a K node: max(psi - omega, w - psi, 0) where w is the local maximal
/// value computed as if the node carried no obstacle. The second term flags
/// nodes the continuum envelope does not see (isolated points, thin pieces).
/// tol <= 0 selects 0.1 * (delta - min psi).
RegularityReport regularity_report(const EnvelopeSolution& sol, double tol = 0.0);

/// Sum of |density| h^{2n} over free nodes more than two nodes from K and from the rim.
double maximality_residual(const EnvelopeSolution& sol,
                           DensityForm form = DensityForm::kPointwise);

/// max |omega - delta| over the free nodes touching the BOUNDARY layer.
double boundary_residual(const EnvelopeSolution& sol);

/// max |u - candidate(u)| over free nodes, and max(u - psi) over K nodes.
struct FixedPointResidual {
  double free_nodes = 0.0;
  double obstacle = 0.0;
};
FixedPointResidual fixed_point_residual(const EnvelopeSolution& sol);

/// Re-solves the envelope equation inside the open ball B (which must avoid K),
/// keeping omega as boundary data outside B; the ball starts from delta.
ScalarField local_maximal_replacement(const EnvelopeSolution& sol, const Point& center,
                                      double radius, std::size_t* replaced = nullptr);

double default_relaxation(const Condenser& c);

}  // namespace mscap
