#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mscap/capacity.hpp"

namespace mscap {

/// What a battery entry exercises.
enum class EntryKind {
  kRadial,        ///< concentric balls, constant weight: closed forms available
  kWeighted,      ///< jittered K ball with a nonconstant weight
  kComponents,    ///< K made of two balls
  kMonotonicity,  ///< randomized nested pairs for the three monotonicity clauses
  kPolar,         ///< shrinking balls around a point
  kComparison,    ///< constructed pairs for the comparison principle
};

const char* to_string(EntryKind k);

struct BatteryEntry {
  std::string name;
  EntryKind kind = EntryKind::kRadial;
  CondenserSpec spec;
  /// Finest spacing; refinement checks also use h*2 and h*4.
  double h = 1.0 / 128;
  /// Relative tolerance of the closed-form capacity check (radial entries).
  double closed_form_tol = 0.02;
  int samples = 10;  ///< randomized configurations (monotonicity, comparison)
  /// Explicit spacings, coarse to fine; empty means {4h, 2h, h}.
  std::vector<double> hs;
  /// Radial entries: include the outer capacity checks and take the
  /// refinement order from one extra halving of h (n = 1 only).
  bool outer = true;

  std::vector<double> levels() const;
};

struct SuiteConfig {
  std::uint64_t seed = 7;
  std::vector<BatteryEntry> battery;
  /// Multiplies every capacity measure; 1 except for the mutation test.
  double density_scale = 1.0;
};

/// Default battery: n = 1 condensers at h = 1/128 (randomized clauses at 1/64).
/// With_n2 adds the two radial ball condensers of C^2 (p = 1 at h = 1/24 and
/// the Monge-Ampere branch at h = 1/16), which take minutes.
SuiteConfig default_suite(std::uint64_t seed, bool with_n2 = false);

struct CheckRecord {
  std::string id;
  std::string anchor;
  std::string subject;
  double measured = 0.0;
  double threshold = 0.0;
  std::string relation;  ///< "<=" or ">="
  bool pass = false;
  std::string detail;
};

struct SuiteReport {
  std::vector<CheckRecord> checks;
  std::size_t passed = 0;
  std::size_t failed = 0;
  nlohmann::json fingerprint = nlohmann::json::object();

  bool pass() const { return failed == 0; }
  nlohmann::json to_json() const;
  std::string table() const;
};

/// The anchors the suite covers, one per theory statement in scope.
const std::vector<std::string>& anchor_table();
/// Anchor of a check id; throws INVALID_ARGUMENT for unknown ids.
const std::string& anchor_of(const std::string& check_id);
/// Every check id the suite can emit.
std::vector<std::string> check_ids();

/// Runs every check of every entry. Errors inside a check become FAIL records.
/// Deterministic for a fixed config: no timings enter the report.
SuiteReport run_suite(const SuiteConfig& cfg);

/// A pair u, v of class-m fields with F = {u < v} compact in D.
struct ComparisonPair {
  std::string label;
  int n = 1;
  int m = 1;
  ScalarField u, v;
};

/// Radial and perturbed radial pairs on a grid over a ball, `count` in total.
std::vector<ComparisonPair> comparison_pairs(std::uint64_t seed, int count, double h);

struct ComparisonResult {
  bool admissible = false;  ///< both members, F nonempty and away from the rim
  double worst_slack = 0.0;  ///< min over k of mass_k(u; F) - mass_k(v; F)
  std::vector<double> mass_u, mass_v;
  std::size_t f_nodes = 0;
};

ComparisonResult comparison_check(const ComparisonPair& pair);

}  // namespace mscap
