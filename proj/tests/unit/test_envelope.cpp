#include <doctest.h>

#include <cmath>
#include <functional>

#include "../oracles/radial_oracle.hpp"
#include "mscap/capacity.hpp"
#include "mscap/error.hpp"
#include "mscap/radial.hpp"
#include "mscap/verify.hpp"

using namespace mscap;

namespace {

CondenserSpec disk(double rk = 0.5, double c = -1.0, double delta = 0.0) {
  CondenserSpec s;
  s.geometry.n = 1;
  s.geometry.domain = Shape::ball({}, 1.0);
  s.geometry.compact = {Shape::ball({}, rk)};
  s.psi = Expression::constant(c);
  s.delta = delta;
  return s;
}

SolverOptions at(double h) {
  SolverOptions o;
  o.h = h;
  return o;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("closed forms agree with the 1-D flux oracle") {
  // Frozen reference values.
  const double n1 = 2.266180070913597, n2 = 1.9678472775095093, ma = 3.7520860334113633;
  CHECK(radial_capacity({1, 1, 0.5, 1.0, -1.0, 0.0}) == doctest::Approx(n1).epsilon(1e-14));
  CHECK(radial_capacity({2, 1, 0.4, 0.9, -1.0, 0.0}) == doctest::Approx(n2).epsilon(1e-14));
  CHECK(radial_capacity({2, 2, 0.4, 0.9, -1.0, 0.0}) == doctest::Approx(ma).epsilon(1e-14));
  CHECK(oracle::radial_reference(1, 1, 0.5, 1.0, -1.0, 0.0).capacity == doctest::Approx(n1).epsilon(1e-8));
  CHECK(oracle::radial_reference(2, 1, 0.4, 0.9, -1.0, 0.0).capacity == doctest::Approx(n2).epsilon(1e-8));
  CHECK(oracle::radial_reference(2, 2, 0.4, 0.9, -1.0, 0.0).capacity == doctest::Approx(ma).epsilon(1e-8));
  // The oracle's own normalization on |z|^2: n! vol(B_T).
  CHECK(oracle::anchor_mass(1, 1, 0.7) == doctest::Approx(oracle::ball_volume(1, 0.7)).epsilon(1e-14));
  CHECK(oracle::anchor_mass(2, 1, 0.7) == doctest::Approx(2.0 * oracle::ball_volume(2, 0.7)).epsilon(1e-14));
  CHECK(oracle::anchor_mass(2, 2, 0.7) == doctest::Approx(2.0 * oracle::ball_volume(2, 0.7)).epsilon(1e-14));
  // Profiles.
  const auto pr = oracle::radial_reference(1, 1, 0.5, 1.0, -1.0, 0.0);
  for (double t : {0.5, 0.6, 0.75, 0.9, 1.0})
    CHECK(pr(t) == doctest::Approx(radial_envelope({1, 1, 0.5, 1.0, -1.0, 0.0}, t)).epsilon(1e-8));
}

TEST_CASE("disk envelope invariants and closed form") {
  const double h = 1.0 / 32;
  const EnvelopeSolution sol = solve_envelope(disk(), at(h));
  const GridDomain& g = sol.omega.grid();
  const auto pr = oracle::radial_reference(1, 1, 0.5, 1.0, -1.0, 0.0);
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const NodeClass c = g.cls(i);
    if (c == NodeClass::kExterior) continue;
    CHECK(sol.omega[i] <= 0.0);
    if (c == NodeClass::kBoundary) CHECK(sol.omega[i] == 0.0);
    if (c == NodeClass::kCompact) CHECK(sol.omega[i] <= -1.0);
    if (c == NodeClass::kInterior) err = std::max(err, std::abs(sol.omega[i] - pr(std::sqrt(squared_norm(g.coords(i), 2)))));
  }
  CHECK(err <= 3.0 * h);
  CHECK(sol.final_update < 1e-10 * h * h);
  CHECK(is_m_subharmonic(sol.omega, 1).member);
  CHECK(regularity_report(sol).regular);
  CHECK(sol.maximality_residual < 1e-9);
}

TEST_CASE("infeasible and degenerate weights") {
  CHECK(code_of([] { solve_envelope(disk(0.5, 0.0, 0.0), at(1.0 / 16)); }) == ErrorCode::kInfeasible);
  // psi == delta allowed on request: the envelope is the constant and carries no mass.
  SolverOptions o = at(1.0 / 16);
  o.allow_degenerate = true;
  const EnvelopeSolution sol = solve_envelope(disk(0.5, 0.0, 0.0), o);
  for (double v : sol.omega.values())
    if (!std::isnan(v)) CHECK(v == 0.0);
  CapacityOptions co;
  co.solver = o;
  CHECK(capacity_from_envelope(sol, co).value == 0.0);
  CHECK(sol.maximality_residual == 0.0);
  CHECK(sol.boundary_residual == 0.0);
}

TEST_CASE("budget exhaustion is reported") {
  SolverOptions o = at(1.0 / 32);
  o.max_sweeps = 3;
  CHECK(code_of([&] { solve_envelope(disk(), o); }) == ErrorCode::kNoConvergence);
}

TEST_CASE("restart and local replacement reproduce the envelope") {
  const double h = 1.0 / 32;
  const EnvelopeSolution sol = solve_envelope(disk(), at(h));
  const EnvelopeSolution again = solve_envelope(sol.condenser, at(h), &sol.omega);
  double mx = 0.0;
  for (std::size_t i = 0; i < sol.omega.size(); ++i)
    if (!std::isnan(sol.omega[i])) mx = std::max(mx, std::abs(again.omega[i] - sol.omega[i]));
  CHECK(mx <= 1e-10 * h * h);

  std::size_t replaced = 0;
  const ScalarField w = local_maximal_replacement(sol, {0.75, 0.0}, 0.15, &replaced);
  CHECK(replaced > 0);
  double dev = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!std::isnan(w[i])) dev = std::max(dev, std::abs(w[i] - sol.omega[i]));
  CHECK(dev < 1e-8);
  CHECK(code_of([&] { local_maximal_replacement(sol, {0.5, 0.0}, 0.1); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("capacity is linear in the jump and the oracle brackets it") {
  const double h = 1.0 / 32;
  CapacityOptions o;
  o.solver = at(h);
  const double c1 = capacity_via_measure(disk(0.5, -1.0, 0.0), o).value;
  const double c2 = capacity_via_measure(disk(0.5, -2.0, 0.0), o).value;
  CHECK(c2 / c1 == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(std::abs(c1 - 2.266180070913597) / 2.266180070913597 < 0.03);

  const EnvelopeSolution sol = solve_envelope(disk(), o.solver);
  const double value = capacity_from_envelope(sol, o).value;
  const OracleReport env_only = capacity_direct_oracle(sol, {{"envelope", sol.omega}}, value);
  CHECK(env_only.gap == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  const OracleReport fam = capacity_direct_oracle(sol, standard_family(sol), value);
  CHECK(fam.candidates.size() == 20);
  CHECK(fam.argmin == "envelope");
  CHECK(fam.gap >= -tau(h));
  // A bump above the constraint is rejected.
  ScalarField up = sol.omega;
  for (std::size_t i = 0; i < up.size(); ++i)
    if (sol.omega.grid().cls(i) == NodeClass::kCompact) up[i] += 0.5;
  CHECK(code_of([&] { capacity_direct_oracle(sol, {{"above psi", up}}, value); }) == ErrorCode::kEmptyFamily);
}

TEST_CASE("refinement summary") {
  // C(h) = 2 - h exactly: order 1 and the exact limit.
  const RefinementSummary s = summarize_refinement({{0.1, 1.9}, {0.05, 1.95}, {0.025, 1.975}});
  CHECK(s.order == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.extrapolated == doctest::Approx(2.0).epsilon(1e-12));
  // Unequal ratios, C(h) = 3 + h^2.
  const RefinementSummary u = summarize_refinement({{1.0 / 12, 3 + 1.0 / 144}, {1.0 / 16, 3 + 1.0 / 256}, {1.0 / 24, 3 + 1.0 / 576}});
  CHECK(u.order == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(u.extrapolated == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(std::isnan(summarize_refinement({{0.1, 1.0}}).order));
}

TEST_CASE("outer capacity sequence is monotone") {
  CapacityOptions o;
  o.solver = at(1.0 / 64);
  const OuterReport r = outer_capacity(disk(), o);
  REQUIRE(r.levels.size() == 3);
  CHECK(r.levels[0].value >= r.levels[1].value);
  CHECK(r.levels[1].value >= r.levels[2].value);
  CHECK(r.report.value > 0.0);
}

TEST_CASE("suite bookkeeping") {
  SuiteConfig empty;
  const SuiteReport r = run_suite(empty);
  CHECK(r.checks.empty());
  CHECK(r.pass());
  CHECK(r.passed == 0);
  const auto& anchors = anchor_table();
  CHECK(anchors.size() == 20);
  for (const auto& id : check_ids()) {
    const std::string& a = anchor_of(id);
    CHECK(std::find(anchors.begin(), anchors.end(), a) != anchors.end());
  }
  for (const auto& a : anchors) {
    bool used = false;
    for (const auto& id : check_ids()) used = used || anchor_of(id) == a;
    CAPTURE(a);
    CHECK(used);
  }
  CHECK(code_of([] { anchor_of("no.such.check"); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("a corrupted normalization breaks values, not order") {
  SuiteConfig cfg;
  cfg.density_scale = 2.0;
  BatteryEntry rad{"radial", EntryKind::kRadial, disk(), 1.0 / 64};
  BatteryEntry mono{"nested", EntryKind::kMonotonicity, disk(0.3), 1.0 / 32};
  mono.samples = 3;
  cfg.battery = {rad, mono};
  const SuiteReport r = run_suite(cfg);
  auto status = [&](const std::string& id) {
    for (const auto& c : r.checks)
      if (c.id == id) return c.pass;
    FAIL("missing check " << id);
    return false;
  };
  CHECK_FALSE(status("capacity.identity"));
  CHECK_FALSE(status("capacity.oracle_identity"));
  CHECK(status("capacity.monotone_K"));
  CHECK(status("capacity.monotone_psi"));
  CHECK(status("capacity.monotone_delta"));
  CHECK_FALSE(r.pass());
}
