#include "mscap/hessian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mscap/error.hpp"

namespace mscap {

namespace {

// True when every node within max-norm `reach` of i exists and is not EXTERIOR.
bool stencil_available(const GridDomain& g, std::size_t i, int reach) {
  if (g.cls(i) == NodeClass::kExterior) return false;
  const MultiIndex k = g.multi_index(i);
  for (int a = 0; a < g.dim(); ++a)
    if (k[a] - reach < g.kmin(a) || k[a] + reach >= g.kmin(a) + g.extent(a)) return false;
  const int d = g.dim();
  MultiIndex o{0, 0, 0, 0};
  const int lim[4] = {reach, reach, d > 2 ? reach : 0, d > 2 ? reach : 0};
  for (o[0] = -lim[0]; o[0] <= lim[0]; ++o[0])
    for (o[1] = -lim[1]; o[1] <= lim[1]; ++o[1])
      for (o[2] = -lim[2]; o[2] <= lim[2]; ++o[2])
        for (o[3] = -lim[3]; o[3] <= lim[3]; ++o[3]) {
          const auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + g.offset(o));
          if (g.cls(j) == NodeClass::kExterior) return false;
        }
  return true;
}

[[noreturn]] void off_grid(const GridDomain& g, std::size_t i) {
  const Point x = g.coords(i);
  std::string where = "(";
  for (int a = 0; a < g.dim(); ++a) where += (a ? "," : "") + std::to_string(x[a]);
  throw Error(ErrorCode::kStencilOffGrid, "stencil leaves the grid at node " + where + ")");
}

// Raw second differences on the flat array.
struct Diff {
  const double* u;
  std::ptrdiff_t s[4];
  double inv_h2;

  double d2(std::size_t i, int a) const {
    return (u[i + s[a]] + u[i - s[a]] - 2.0 * u[i]) * inv_h2;
  }
  double dx(std::size_t i, int a, int b) const {
    return (u[i + s[a] + s[b]] - u[i + s[a] - s[b]] - u[i - s[a] + s[b]] + u[i - s[a] - s[b]]) *
           (0.25 * inv_h2);
  }
  double d1(std::size_t i, int a, double inv_h) const {
    return (u[i + s[a]] - u[i - s[a]]) * (0.5 * inv_h);
  }
};

Diff make_diff(const ScalarField& u) {
  const GridDomain& g = u.grid();
  Diff d{u.values().data(), {g.stride(0), g.stride(1), g.stride(2), g.stride(3)},
         1.0 / (g.h() * g.h())};
  return d;
}

Hermitian2 hessian_at(const Diff& d, std::size_t i, int n) {
  Hermitian2 H;
  H.a11 = 0.25 * (d.d2(i, 0) + d.d2(i, 1));
  if (n == 2) {
    H.a22 = 0.25 * (d.d2(i, 2) + d.d2(i, 3));
    H.a12 = {0.25 * (d.dx(i, 0, 2) + d.dx(i, 1, 3)), 0.25 * (d.dx(i, 0, 3) - d.dx(i, 1, 2))};
  }
  return H;
}

}  // namespace

Hermitian2 complex_hessian(const ScalarField& u, std::size_t node) {
  const GridDomain& g = u.grid();
  if (node >= g.size() || !stencil_available(g, node, 1)) off_grid(g, node);
  return hessian_at(make_diff(u), node, g.n());
}

std::array<double, 2> eigenvalues(const Hermitian2& H, int n) {
  if (n == 1) return {H.a11, 0.0};
  const double mean = 0.5 * (H.a11 + H.a22);
  const double half = 0.5 * (H.a11 - H.a22);
  const double rad = std::sqrt(half * half + std::norm(H.a12));
  return {mean - rad, mean + rad};
}

std::array<double, 2> elementary_symmetric(const std::array<double, 2>& lambda, int n) {
  if (n == 1) return {lambda[0], 0.0};
  return {lambda[0] + lambda[1], lambda[0] * lambda[1]};
}

double density_normalization(int n, int p) {
  double f = 1.0;
  for (int k = 2; k <= p; ++k) f *= k;
  for (int k = 2; k <= n - p; ++k) f *= k;
  return f;
}

HessianSpectrum spectrum(const ScalarField& u) {
  const GridDomain& g = u.grid();
  HessianSpectrum out;
  out.grid = u.grid_ptr();
  out.n = g.n();
  out.evaluated = g.mask(Region::kDomain);
  out.lambda.assign(g.size(), {0.0, 0.0});
  out.sigma.assign(g.size(), {0.0, 0.0});
  const Diff d = make_diff(u);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!out.evaluated[i]) continue;
    if (!stencil_available(g, i, 1)) off_grid(g, i);
    out.lambda[i] = eigenvalues(hessian_at(d, i, g.n()), g.n());
    out.sigma[i] = elementary_symmetric(out.lambda[i], g.n());
  }
  return out;
}

double conservative_ma_density(const ScalarField& u, std::size_t node) {
  const GridDomain& g = u.grid();
  if (g.n() != 2) throw Error(ErrorCode::kInvalidArgument, "conservative form needs n = 2");
  if (node >= g.size() || !stencil_available(g, node, 2)) off_grid(g, node);
  const Diff d = make_diff(u);
  const double h = g.h();
  const double inv_h = 1.0 / h;

  auto A = [&](std::size_t i, int a, int b) { return a == b ? d.d2(i, a) : d.dx(i, a, b); };

  // Flux component m at the face between i and i + e_m.
  auto flux = [&](std::size_t i, int m) {
    const std::size_t j = i + d.s[m];
    double du[4], a[4][4];
    for (int k = 0; k < 4; ++k)
      du[k] = k == m ? (d.u[j] - d.u[i]) * inv_h : 0.5 * (d.d1(i, k, inv_h) + d.d1(j, k, inv_h));
    for (int p = 0; p < 4; ++p)
      for (int q = p; q < 4; ++q) a[p][q] = a[q][p] = 0.5 * (A(i, p, q) + A(j, p, q));
    // Principal 2x2 minors pair coordinates of z1 with coordinates of z2.
    const int partners0[2] = {2, 3};
    const int partners1[2] = {0, 1};
    const int* partners = m < 2 ? partners0 : partners1;
    double gm = 0.0;
    for (int t = 0; t < 2; ++t) {
      const int j2 = partners[t];
      gm += 0.5 * (du[m] * a[j2][j2] - du[j2] * a[m][j2]);
    }
    // Mixed minor M(0,1|2,3).
    switch (m) {
      case 0: gm += -0.5 * (du[2] * a[1][3] - du[3] * a[1][2]); break;
      case 1: gm += 0.5 * (du[2] * a[0][3] - du[3] * a[0][2]); break;
      case 2: gm += -0.5 * (du[0] * a[1][3] - du[1] * a[0][3]); break;
      default: gm += 0.5 * (du[0] * a[1][2] - du[1] * a[0][2]); break;
    }
    return gm;
  };

  double q = 0.0;
  for (int m = 0; m < 4; ++m) q += (flux(node, m) - flux(node - d.s[m], m)) * inv_h;
  return q / 8.0;
}

MeasureField hessian_density(const ScalarField& u, int p, DensityForm form) {
  const GridDomain& g = u.grid();
  if (p < 1 || p > g.n()) throw Error(ErrorCode::kInvalidArgument, "order p must be in 1..n");
  const bool conservative = form == DensityForm::kConservative && g.n() == 2 && p == 2;
  MeasureField out{ScalarField(u.grid_ptr(), 0.0), p, form};
  const double norm = density_normalization(g.n(), p);
  const Diff d = make_diff(u);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const NodeClass c = g.cls(i);
    if (c != NodeClass::kInterior && c != NodeClass::kCompact) continue;
    if (conservative) {
      out.density[i] = conservative_ma_density(u, i);
      continue;
    }
    if (!stencil_available(g, i, 1)) off_grid(g, i);
    const auto sigma = elementary_symmetric(eigenvalues(hessian_at(d, i, g.n()), g.n()), g.n());
    out.density[i] = norm * sigma[p - 1];
  }
  return out;
}

double default_membership_tol(const ScalarField& u) {
  double scale = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u.grid().cls(i) != NodeClass::kExterior) scale = std::max(scale, std::abs(u[i]));
  if (scale == 0.0) scale = 1.0;
  const double h = u.grid().h();
  return 1e-8 * scale / (h * h);
}

MembershipReport is_m_subharmonic(const ScalarField& u, int m, double tol,
                                  const NodeMask* selection) {
  const GridDomain& g = u.grid();
  if (m < 1 || m > g.n()) throw Error(ErrorCode::kInvalidArgument, "class m must be in 1..n");
  if (!(tol >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "tol must be >= 0");
  if (selection && selection->size() != g.size())
    throw Error(ErrorCode::kDomainMismatch, "selection mask does not match the grid");
  MembershipReport rep;
  rep.m = m;
  rep.p = g.n() - m + 1;
  rep.tol = tol;
  const Diff d = make_diff(u);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const NodeClass c = g.cls(i);
    if (selection ? !(*selection)[i] : (c != NodeClass::kInterior && c != NodeClass::kCompact))
      continue;
    if (!stencil_available(g, i, 1)) off_grid(g, i);
    const auto sigma = elementary_symmetric(eigenvalues(hessian_at(d, i, g.n()), g.n()), g.n());
    ++rep.tested;
    bool bad = false;
    for (int k = 1; k <= rep.p; ++k) {
      const double v = -sigma[k - 1];
      if (v > rep.worst_violation) {
        rep.worst_violation = v;
        rep.worst_node = i;
        rep.worst_k = k;
      }
      bad |= sigma[k - 1] < -tol;
    }
    if (bad) ++rep.violations;
  }
  rep.member = rep.violations == 0;
  return rep;
}

MembershipReport is_m_subharmonic(const ScalarField& u, int m) {
  return is_m_subharmonic(u, m, default_membership_tol(u));
}

}  // namespace mscap
