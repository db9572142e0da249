#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mscap/envelope.hpp"

namespace mscap {

enum class CapacityMethod { kMeasureIntegral, kDirectOracle, kOuter };

const char* to_string(CapacityMethod m);

struct RefinementRow {
  double h = 0.0;
  double value = 0.0;
};

/// Richardson analysis of a refinement table ordered from coarse to fine.
struct RefinementSummary {
  std::vector<RefinementRow> rows;
  double order = 0.0;         ///< observed order (NaN with fewer than three rows)
  double extrapolated = 0.0;  ///< limit estimate (last value with one row)
};

/// Observed order from the last three rows, log(|C1 - C2| / |C2 - C3|) / log(ratio)
/// for equal ratios and the root q of (h1^q - h2^q) / (h2^q - h3^q) = (C1 - C2) / (C2 - C3)
/// otherwise, plus the Richardson limit of the last two rows.
RefinementSummary summarize_refinement(std::vector<RefinementRow> rows, double assumed_order = 1.0);

struct CapacityOptions {
  SolverOptions solver;
  DensityForm form = DensityForm::kConservative;
  /// Width (nodes, max-norm) of the ring around K added to the integral; -1 uses the stencil radius.
  int collar = -1;
  /// Multiplies the measure before integration. Only for the mutation test of the suite.
  double density_scale = 1.0;
};

struct CapacityReport {
  CapacityMethod method = CapacityMethod::kMeasureIntegral;
  double value = 0.0;
  double h = 0.0;
  double mass_on_k = 0.0;
  double mass_on_collar = 0.0;
  /// Per-node contributions density * h^{2n} on K and its collar (zero elsewhere).
  std::vector<double> node_mass;
  bool lower_confidence = false;  ///< K was not reported REGULAR
  RefinementSummary refinement;
  CondenserSpec spec;
  nlohmann::json diagnostics = nlohmann::json::object();

  nlohmann::json to_json(bool with_nodes = false) const;
};

/// Tolerance tau(h) = kTauConstant * h for inequality checks.
inline constexpr double kTauConstant = 2.0;
inline double tau(double h) { return kTauConstant * h; }

/// Hessian mass of the envelope on K plus its collar.
CapacityReport capacity_from_envelope(const EnvelopeSolution& sol, const CapacityOptions& opt);
CapacityReport capacity_via_measure(const CondenserSpec& spec, const CapacityOptions& opt);

/// Capacity on each grid spacing in `hs` (coarse to fine) with the Richardson summary.
CapacityReport refinement_sweep(const CondenserSpec& spec, const CapacityOptions& opt,
                                const std::vector<double>& hs);

// ---------------------------------------------------------------------------
// Direct oracle: the infimum definition evaluated over a finite family.

struct Candidate {
  std::string label;
  ScalarField u;
};

struct CandidateRecord {
  std::string label;
  bool certified = false;
  std::string reason;  ///< why a candidate was rejected
  double mass = 0.0;   ///< integral of the density over D
  double worst_violation = 0.0;
};

struct OracleReport {
  double value = 0.0;  ///< minimum mass over certified candidates
  std::string argmin;
  double measure_value = 0.0;
  double gap = 0.0;  ///< value - measure_value
  std::vector<CandidateRecord> candidates;
  nlohmann::json to_json() const;
};

struct OracleOptions {
  /// Slack of the constraint and membership checks; <= 0 uses the hessian default.
  double membership_tol = 0.0;
  double constraint_tol = 1e-12;
  DensityForm form = DensityForm::kConservative;
};

/// Throws EMPTY_FAMILY when no candidate passes the membership and constraint checks.
OracleReport capacity_direct_oracle(const EnvelopeSolution& sol, const std::vector<Candidate>& family,
                                    double measure_value, const OracleOptions& opt = {});

/// Envelope, truncated radial kernels above the envelope's slope, and the
/// envelope plus nonnegative quadratic bumps (count members in total).
/// The kernels are only added for concentric ball condensers with constant psi.
std::vector<Candidate> standard_family(const EnvelopeSolution& sol, int count = 20);

// ---------------------------------------------------------------------------

struct OuterLevel {
  double eps = 0.0;
  double value = 0.0;
};

struct OuterReport {
  CapacityReport report;  ///< value = limit estimate
  std::vector<OuterLevel> levels;  ///< ordered from the widest neighbourhood
  double last_value = 0.0;
  double extrapolated = 0.0;
  double monotonicity_slack = 0.0;
};

/// Capacities of the fattened neighbourhoods U_eps of K (psi extended by the
/// same expression), eps = factor * h for each factor. Throws NONMONOTONE_SEQUENCE
/// when a narrower neighbourhood gains more than tau(h).
OuterReport outer_capacity(const CondenserSpec& spec, const CapacityOptions& opt,
                           std::vector<double> eps_factors = {16.0, 8.0, 4.0});

/// Same condenser with psi = -1 and delta = 0.
CondenserSpec unweighted(const CondenserSpec& spec);

struct UnweightedReport {
  CapacityReport inner;
  OuterReport outer;
  double relative_difference = 0.0;
};
UnweightedReport unweighted_capacity(const Geometry& geometry, int m, const CapacityOptions& opt,
                                     bool with_outer = true);

struct PolarBoundsReport {
  double weighted = 0.0;
  double unweighted = 0.0;
  double c1 = 0.0;  ///< (delta - max psi)^p
  double c2 = 0.0;  ///< (delta - min psi)^p
  double lower = 0.0;
  double upper = 0.0;
  double tau = 0.0;
  bool lower_ok = false;
  bool upper_ok = false;
  bool pass = false;
  nlohmann::json to_json() const;
};

PolarBoundsReport polar_bounds_check(const CondenserSpec& spec, const CapacityOptions& opt);

struct PolarTrendReport {
  std::vector<OuterLevel> levels;
  double a = 0.0;              ///< least-squares fit C = a / log(1/eps)
  double fit_residual = 0.0;   ///< max relative residual of that fit
  double a2 = 0.0, b2 = 0.0;   ///< fit C = a2 / log(1/eps) + b2
  double limit_ratio = 0.0;    ///< |b2| / C(largest eps)
  bool pass = false;
};

/// Capacities of K = ball(eps) around `center` for each eps, each with psi, delta from spec.
PolarTrendReport polar_trend(const CondenserSpec& spec, const Point& center,
                             const std::vector<double>& eps, const CapacityOptions& opt);

}  // namespace mscap
