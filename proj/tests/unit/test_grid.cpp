#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "mscap/error.hpp"
#include "mscap/field.hpp"
#include "mscap/grid.hpp"

using namespace mscap;

namespace {

Geometry disk_condenser(double rk, double rd = 1.0) {
  Geometry g;
  g.n = 1;
  g.domain = Shape::ball({}, rd);
  g.compact = {Shape::ball({}, rk)};
  return g;
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

// Fraction of uniform samples of [-1,1]^2 falling in the disk of radius rho, times 4.
double monte_carlo_area(double rho, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  int hit = 0;
  for (int i = 0; i < samples; ++i) {
    const double x = U(rng), y = U(rng);
    hit += x * x + y * y <= rho * rho;
  }
  return 4.0 * hit / samples;
}

}  // namespace

TEST_CASE("disk condenser masks and counts") {
  const auto g = GridDomain::build(disk_condenser(0.5), 1.0 / 64);
  const double h = g->h();
  const double expected = std::numbers::pi * 0.25 / (h * h);
  CHECK(std::abs(static_cast<double>(g->count(NodeClass::kCompact)) - expected) < 4.0 * 0.5 / h * 2.0);
  CHECK(g->count(NodeClass::kBoundary) > 0);

  // Every neighbour of a K node is in D, every neighbour of a D node carries data.
  for (std::size_t i = 0; i < g->size(); ++i) {
    const NodeClass c = g->cls(i);
    if (c != NodeClass::kCompact && c != NodeClass::kInterior) continue;
    const MultiIndex k = g->multi_index(i);
    for (int a = 0; a < 2; ++a)
      for (int s : {-1, 1}) {
        MultiIndex q = k;
        q[a] += s;
        REQUIRE(g->has_node(q));
        const NodeClass nc = g->cls(g->flat_index(q));
        CHECK(nc != NodeClass::kExterior);
        if (c == NodeClass::kCompact) CHECK((nc == NodeClass::kInterior || nc == NodeClass::kCompact));
      }
  }
}

TEST_CASE("K within 3h of the rim is rejected") {
  CHECK(code_of([] { GridDomain::build(disk_condenser(0.99), 1.0 / 64); }) == ErrorCode::kSeparationTooSmall);
  CHECK(code_of([] {
          Geometry g = disk_condenser(0.2);
          g.compact = {Shape::ball({0.3, 0.3}, 0.001)};
          GridDomain::build(g, 1.0 / 4);
        }) == ErrorCode::kEmptyK);
}

TEST_CASE("box in C^2 at h = 1/16 has 33^4 nodes carrying data") {
  Geometry g;
  g.n = 2;
  g.domain = Shape::box({-1, -1, -1, -1}, {1, 1, 1, 1});
  g.compact = {Shape::ball({}, 0.4)};
  const auto grid = GridDomain::build(g, 1.0 / 16);
  const std::size_t data = grid->size() - grid->count(NodeClass::kExterior);
  CHECK(data == 33u * 33u * 33u * 33u);
  CHECK(grid->count(NodeClass::kBoundary) == 33u * 33u * 33u * 33u - 31u * 31u * 31u * 31u);
}

TEST_CASE("integration of constants and indicators") {
  const auto g = GridDomain::build(disk_condenser(0.5), 1.0 / 128);
  const double h = g->h();
  const ScalarField one(g, 1.0), zero(g, 0.0);
  CHECK(std::abs(integrate(one, Region::kDomain) - std::numbers::pi) < 4.0 * h);
  CHECK(integrate(zero, Region::kDomain) == 0.0);

  const double area = integrate(one, Region::kCompact);
  const double mc = monte_carlo_area(0.5, 400000, 11);
  CHECK(std::abs(area - std::numbers::pi / 4) < 2.0 * h);
  CHECK(std::abs(mc - std::numbers::pi / 4) < 0.01);  // 3 sigma at 4e5 samples
  CHECK(std::abs(area - mc) < 2.0 * h + 0.01);
}

TEST_CASE("integration is linear") {
  const auto g = GridDomain::build(disk_condenser(0.5), 1.0 / 64);
  const ScalarField f = ScalarField::sample(g, [](const Point& x) { return std::sin(3 * x[0]) + x[1]; });
  const ScalarField k = ScalarField::sample(g, [](const Point& x) { return x[0] * x[1] - 2.0; });
  const double lhs = integrate(f.combine(2.5, k, -0.75), Region::kDomain);
  const double rhs = 2.5 * integrate(f, Region::kDomain) - 0.75 * integrate(k, Region::kDomain);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
}

TEST_CASE("volume of D converges at first order") {
  std::vector<double> err;
  for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    const auto g = GridDomain::build(disk_condenser(0.5), h);
    err.push_back(std::abs(integrate(ScalarField(g, 1.0), Region::kDomain) - std::numbers::pi));
  }
  for (double e : err) CHECK(e < 10.0 * 1.0 / 32);
  CHECK(err.back() < err.front());
}

TEST_CASE("refinement nests nodes and composes") {
  const auto g = GridDomain::build(disk_condenser(0.5), 1.0 / 32);
  const auto f2 = g->refine(2);
  CHECK(f2->h() == 1.0 / 64);
  const double ratio = static_cast<double>(f2->count(NodeClass::kCompact)) / g->count(NodeClass::kCompact);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
  for (std::size_t i = 0; i < g->size(); ++i) {
    // the collar is a fixed number of nodes wide, so only D nodes must persist
    if (g->cls(i) != NodeClass::kInterior && g->cls(i) != NodeClass::kCompact) continue;
    MultiIndex k = g->multi_index(i);
    for (auto& v : k) v *= 2;
    REQUIRE(f2->has_node(k));
    CHECK(f2->cls(f2->flat_index(k)) != NodeClass::kExterior);
  }
  const auto twice = g->refine(2)->refine(2), once = g->refine(4);
  CHECK(twice->same_layout(*once));
  CHECK(twice->classes() == once->classes());
  CHECK(code_of([&] { g->refine(1); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("fields on different grids do not mix") {
  const auto a = GridDomain::build(disk_condenser(0.5), 1.0 / 32);
  const auto b = GridDomain::build(disk_condenser(0.4), 1.0 / 32);
  CHECK(code_of([&] { ScalarField(a, 1.0).combine(1.0, ScalarField(b, 1.0), 1.0); }) ==
        ErrorCode::kDomainMismatch);
}
