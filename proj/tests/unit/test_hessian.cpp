#include <doctest.h>

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <random>

#include "mscap/error.hpp"
#include "mscap/hessian.hpp"

using namespace mscap;

namespace {

GridPtr ball_grid(int n, double h, double rd = 1.0, double rk = 0.3) {
  Geometry g;
  g.n = n;
  g.domain = Shape::ball({}, rd);
  g.compact = {Shape::ball({}, rk)};
  return GridDomain::build(g, h);
}

bool in_d(const GridDomain& g, std::size_t i) {
  const NodeClass c = g.cls(i);
  return c == NodeClass::kInterior || c == NodeClass::kCompact;
}

// Polynomials in the real coordinates x1, y1, x2, y2 with symbolic derivatives.
struct Poly {
  std::map<std::array<int, 4>, double> terms;

  Poly d(int axis) const {
    Poly out;
    for (const auto& [e, c] : terms) {
      if (e[axis] == 0) continue;
      auto f = e;
      f[axis] -= 1;
      out.terms[f] += c * e[axis];
    }
    return out;
  }
  double operator()(const Point& x) const {
    double s = 0.0;
    for (const auto& [e, c] : terms) {
      double t = c;
      for (int a = 0; a < 4; ++a) t *= std::pow(x[a], e[a]);
      s += t;
    }
    return s;
  }
};

// d^2 u / dz_j dzbar_k = 1/4 [(u_{xj xk} + u_{yj yk}) + i (u_{xj yk} - u_{yj xk})].
std::complex<double> symbolic_entry(const Poly& u, int j, int k, const Point& x) {
  const int xj = 2 * j, yj = 2 * j + 1, xk = 2 * k, yk = 2 * k + 1;
  const double re = u.d(xj).d(xk)(x) + u.d(yj).d(yk)(x);
  const double im = u.d(xj).d(yk)(x) - u.d(yj).d(xk)(x);
  return 0.25 * std::complex<double>(re, im);
}

}  // namespace

TEST_CASE("normalization anchor: density of |z|^2 is n! at every node of D") {
  for (int n : {1, 2}) {
    const auto g = ball_grid(n, n == 1 ? 1.0 / 64 : 1.0 / 8);
    const ScalarField u = ScalarField::sample(g, [n](const Point& x) { return squared_norm(x, 2 * n); });
    const double nf = n == 1 ? 1.0 : 2.0;
    for (int p = 1; p <= n; ++p) {
      const MeasureField mu = hessian_density(u, p);
      for (std::size_t i = 0; i < g->size(); ++i)
        if (in_d(*g, i)) REQUIRE(mu.density[i] == nf);
      CHECK(density_normalization(n, p) == (p == 1 && n == 2 ? 1.0 : p == 2 ? 2.0 : 1.0));
    }
  }
}

TEST_CASE("quadratic anchors") {
  const auto g = ball_grid(2, 1.0 / 8);
  std::size_t node = 0;
  for (std::size_t i = 0; i < g->size(); ++i)
    if (in_d(*g, i)) node = i;

  const ScalarField pluri = ScalarField::sample(g, [](const Point& x) { return x[0] * x[0] - x[1] * x[1]; });
  const Hermitian2 H0 = complex_hessian(pluri, node);
  CHECK(H0.a11 == 0.0);
  CHECK(H0.a22 == 0.0);
  CHECK(std::abs(H0.a12) == 0.0);

  const ScalarField x1sq = ScalarField::sample(g, [](const Point& x) { return x[0] * x[0]; });
  const Hermitian2 H1 = complex_hessian(x1sq, node);
  CHECK(H1.a11 == 0.5);
  CHECK(H1.a22 == 0.0);

  const ScalarField split = ScalarField::sample(
      g, [](const Point& x) { return x[0] * x[0] + x[1] * x[1] - x[2] * x[2] - x[3] * x[3]; });
  const auto lam = eigenvalues(complex_hessian(split, node), 2);
  CHECK(lam[0] == -1.0);
  CHECK(lam[1] == 1.0);

  // |z1|^2 - 0.5 |z2|^2: sigma_1 = 0.5, sigma_2 = -0.5.
  const ScalarField half = ScalarField::sample(
      g, [](const Point& x) { return x[0] * x[0] + x[1] * x[1] - 0.5 * (x[2] * x[2] + x[3] * x[3]); });
  const auto sig = elementary_symmetric(eigenvalues(complex_hessian(half, node), 2), 2);
  CHECK(sig[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sig[1] == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(is_m_subharmonic(half, 2).member);
  CHECK_FALSE(is_m_subharmonic(half, 1).member);

  const ScalarField neg = ScalarField::sample(g, [](const Point& x) { return -squared_norm(x, 4); });
  const MembershipReport r = is_m_subharmonic(neg, 2);
  CHECK_FALSE(r.member);
  CHECK(r.worst_violation == doctest::Approx(2.0));
  CHECK(is_m_subharmonic(ScalarField::sample(g, [](const Point& x) { return squared_norm(x, 4); }), 1).worst_violation ==
        0.0);
}

TEST_CASE("stencil matches the symbolic continuum formula on quadratics") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const auto g = ball_grid(2, 1.0 / 8);
  for (int trial = 0; trial < 10; ++trial) {
    Poly u;
    for (int a = 0; a < 4; ++a)
      for (int b = a; b < 4; ++b) {
        std::array<int, 4> e{0, 0, 0, 0};
        e[a] += 1;
        e[b] += 1;
        u.terms[e] = U(rng);
      }
    u.terms[{1, 0, 0, 0}] = U(rng);
    const ScalarField f = ScalarField::sample(g, [&](const Point& x) { return u(x); });
    for (std::size_t i = 0; i < g->size(); i += 97) {
      if (!in_d(*g, i)) continue;
      const Point x = g->coords(i);
      const Hermitian2 H = complex_hessian(f, i);
      CHECK(H.a11 == doctest::Approx(symbolic_entry(u, 0, 0, x).real()).epsilon(1e-10));
      CHECK(H.a22 == doctest::Approx(symbolic_entry(u, 1, 1, x).real()).epsilon(1e-10));
      CHECK(std::abs(H.a12 - symbolic_entry(u, 0, 1, x)) < 1e-10);
      CHECK(std::abs(symbolic_entry(u, 0, 0, x).imag()) < 1e-15);
    }
  }
}

TEST_CASE("eigenvalues agree with a dense Hermitian eigensolver") {
  const auto g = ball_grid(2, 1.0 / 8);
  const ScalarField u = ScalarField::sample(g, [](const Point& x) {
    return std::sin(x[0] + 0.3 * x[3]) * std::cos(x[1] - x[2]) + std::exp(0.5 * x[2]) * x[3] * x[3];
  });
  int tested = 0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (!in_d(*g, i)) continue;
    const Hermitian2 H = complex_hessian(u, i);
    Eigen::Matrix2cd M;
    M << H.a11, H.a12, std::conj(H.a12), H.a22;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(M);
    const auto lam = eigenvalues(H, 2);
    CHECK(lam[0] <= lam[1]);
    REQUIRE(std::abs(lam[0] - es.eigenvalues()[0]) < 1e-10);
    REQUIRE(std::abs(lam[1] - es.eigenvalues()[1]) < 1e-10);
    const auto sig = elementary_symmetric(lam, 2);
    REQUIRE(std::abs(sig[1] - M.determinant().real()) < 1e-10);
    ++tested;
  }
  CHECK(tested > 1000);
}

TEST_CASE("log|z| is discretely almost harmonic and carries mass pi/2 by flux") {
  Geometry geo;
  geo.n = 1;
  geo.domain = Shape::annulus({}, 0.25, 1.0);
  geo.compact = {Shape::annulus({}, 0.45, 0.55)};
  const auto g = GridDomain::build(geo, 1.0 / 128);
  const ScalarField u = ScalarField::sample(g, [](const Point& x) { return 0.5 * std::log(squared_norm(x, 2)); });
  const MeasureField mu = hessian_density(u, 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i)
    if (in_d(*g, i)) worst = std::max(worst, std::abs(mu.density[i]));
  CHECK(worst < 1e-2);
}

TEST_CASE("regularized log|z| has total mass pi/2 minus the far-field flux") {
  // v = 0.5 log(|z|^2 + e^2): (1/4) flux through |z| = 1 is (pi/2) / (1 + e^2).
  const double e2 = 0.04;
  const auto g = ball_grid(1, 1.0 / 128, 1.0, 0.3);
  const ScalarField v = ScalarField::sample(g, [&](const Point& x) { return 0.5 * std::log(squared_norm(x, 2) + e2); });
  const double mass = integrate(hessian_density(v, 1).density, Region::kDomain);
  CHECK(std::abs(mass - std::numbers::pi / 2 / (1 + e2)) < 4.0 / 128);
}

TEST_CASE("nesting of the classes on random fields") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const auto g = ball_grid(2, 1.0 / 8);
  int members1 = 0;
  for (int t = 0; t < 40; ++t) {
    std::array<double, 10> c{};
    for (auto& v : c) v = U(rng);
    const ScalarField u = ScalarField::sample(g, [&](const Point& x) {
      return (1.2 + c[0]) * x[0] * x[0] + (1.2 + c[1]) * x[1] * x[1] + c[2] * x[2] * x[2] + c[3] * x[3] * x[3] +
             c[4] * x[0] * x[2] + c[5] * x[1] * x[3] + 0.3 * c[6] * x[0] * x[0] * x[0] * x[0];
    });
    if (is_m_subharmonic(u, 1).member) {
      ++members1;
      CHECK(is_m_subharmonic(u, 2).member);
    }
  }
  CHECK(members1 > 0);
}

TEST_CASE("sum of subharmonic fields is subharmonic") {
  const auto g = ball_grid(1, 1.0 / 32);
  const ScalarField a = ScalarField::sample(g, [](const Point& x) { return x[0] * x[0] - 0.5 * x[1] * x[1]; });
  const ScalarField b = ScalarField::sample(g, [](const Point& x) { return std::exp(x[0]) + x[1] * x[1]; });
  REQUIRE(is_m_subharmonic(a, 1).member);
  REQUIRE(is_m_subharmonic(b, 1).member);
  CHECK(is_m_subharmonic(a.combine(1.0, b, 1.0), 1).member);
}

TEST_CASE("off-grid stencil is reported") {
  const auto g = ball_grid(1, 1.0 / 16);
  const ScalarField u(g, 0.0);
  std::size_t ext = 0;
  while (g->cls(ext) != NodeClass::kExterior) ++ext;
  bool thrown = false;
  try {
    complex_hessian(u, ext);
  } catch (const Error& e) {
    thrown = e.code() == ErrorCode::kStencilOffGrid;
  }
  CHECK(thrown);
}
