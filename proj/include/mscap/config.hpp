#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mscap/capacity.hpp"

namespace mscap {

/// A parsed run file: the condenser plus solver and output settings.
struct RunConfig {
  CondenserSpec spec;
  SolverOptions solver;
  /// Refinement levels for `sweep` (h, h/factor, ...); 0 means a single level.
  int sweep = 0;
  int sweep_factor = 2;
  std::string method = "measure";  ///< measure | oracle | outer
  std::vector<double> outer_factors{16.0, 8.0, 4.0};

  std::string out_dir = ".";
  std::string prefix = "mscap";
  bool write_density = false;
  bool write_csv = true;

  CapacityOptions capacity_options() const;
  /// Spacings of the refinement sweep, coarse to fine.
  std::vector<double> sweep_levels(int levels) const;
};

/// Reads the flat sectioned format:
///
///   [domain]    n, shape, center, radius | lo, hi | inner, outer | radii
///   [compact]   shape and its parameters (one section per component of K)
///   [weight]    m, psi (expression), delta
///   [solver]    h, epsilon, max_sweeps, relaxation, stencil_radius,
///               fit_compact, fit_domain (auto|on|off), allow_degenerate,
///               sweep, sweep_factor, method, outer_factors
///   [output]    dir, prefix, density, csv
///
/// Numbers may be constant expressions ("1/64"); points are comma separated.
/// Throws PARSE_ERROR (with line and column) for malformed text and
/// CONSTRAINT_ERROR for values that violate the condenser invariants,
/// including delta <= sup_K psi checked on the K nodes at spacing h.
RunConfig parse_config_text(std::string_view text, bool check_nodes = true);
RunConfig parse_config(const std::string& path, bool check_nodes = true);

/// Canonical text of a config; parse_config_text(to_text(c)) reproduces c.
std::string to_text(const RunConfig& c);

}  // namespace mscap
