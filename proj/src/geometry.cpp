#include "mscap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mscap/error.hpp"

namespace mscap {

namespace {

// Closed membership is slightly lenient so that nodes sitting exactly on a
// sphere (and roots computed on it) are classified as inside.
constexpr double kClosedRelTol = 1e-10;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double squared_distance(const Point& x, const Point& c, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
  return s;
}

bool radial_test(double d2, double r, bool closed, bool upper) {
  const double r2 = r * r;
  if (upper) return closed ? d2 <= r2 * (1.0 + kClosedRelTol) + 1e-20 : d2 < r2;
  return closed ? d2 >= r2 * (1.0 - kClosedRelTol) - 1e-20 : d2 > r2;
}

void sphere_roots(const Point& x, const Point& v, const Point& c, double r, int begin, int end,
                  std::vector<double>& out) {
  double a = 0.0, b = 0.0, q = 0.0;
  for (int i = begin; i < end; ++i) {
    const double dx = x[i] - c[i];
    a += v[i] * v[i];
    b += 2.0 * dx * v[i];
    q += dx * dx;
  }
  q -= r * r;
  if (a <= 0.0) return;
  const double disc = b * b - 4.0 * a * q;
  if (disc < 0.0) return;
  const double sq = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double w = -0.5 * (b + std::copysign(sq, b));
  if (w != 0.0) {
    out.push_back(w / a);
    out.push_back(q / w);
  } else {
    out.push_back(0.0);
  }
}

std::string fmt_point(const Point& p, int dim) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (int i = 0; i < dim; ++i) os << (i ? "," : "") << p[i];
  os << ')';
  return os.str();
}

}  // namespace

double squared_norm(const Point& x, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += x[i] * x[i];
  return s;
}

bool Shape::contains(const Point& x, int dim, bool closed) const {
  return std::visit(
      Overloaded{
          [&](const Ball& b) {
            return radial_test(squared_distance(x, b.center, dim), b.radius, closed, true);
          },
          [&](const Box& b) {
            for (int i = 0; i < dim; ++i) {
              const double tol = closed ? kClosedRelTol * (b.hi[i] - b.lo[i]) : 0.0;
              if (closed ? (x[i] < b.lo[i] - tol || x[i] > b.hi[i] + tol)
                         : (x[i] <= b.lo[i] || x[i] >= b.hi[i]))
                return false;
            }
            return true;
          },
          [&](const Annulus& a) {
            const double d2 = squared_distance(x, a.center, dim);
            return radial_test(d2, a.inner, closed, false) &&
                   radial_test(d2, a.outer, closed, true);
          },
          [&](const Polydisc& p) {
            for (int j = 0; j < dim / 2; ++j) {
              const double dx = x[2 * j] - p.center[2 * j];
              const double dy = x[2 * j + 1] - p.center[2 * j + 1];
              if (!radial_test(dx * dx + dy * dy, p.radii[j], closed, true)) return false;
            }
            return true;
          },
      },
      v_);
}

void Shape::bounds(int dim, Point& lo, Point& hi) const {
  lo.fill(0.0);
  hi.fill(0.0);
  std::visit(Overloaded{
                 [&](const Ball& b) {
                   for (int i = 0; i < dim; ++i) {
                     lo[i] = b.center[i] - b.radius;
                     hi[i] = b.center[i] + b.radius;
                   }
                 },
                 [&](const Box& b) {
                   for (int i = 0; i < dim; ++i) {
                     lo[i] = b.lo[i];
                     hi[i] = b.hi[i];
                   }
                 },
                 [&](const Annulus& a) {
                   for (int i = 0; i < dim; ++i) {
                     lo[i] = a.center[i] - a.outer;
                     hi[i] = a.center[i] + a.outer;
                   }
                 },
                 [&](const Polydisc& p) {
                   for (int i = 0; i < dim; ++i) {
                     lo[i] = p.center[i] - p.radii[i / 2];
                     hi[i] = p.center[i] + p.radii[i / 2];
                   }
                 },
             },
             v_);
}

std::vector<double> Shape::boundary_roots(const Point& x, const Point& v, int dim) const {
  std::vector<double> roots;
  std::visit(Overloaded{
                 [&](const Ball& b) { sphere_roots(x, v, b.center, b.radius, 0, dim, roots); },
                 [&](const Box& b) {
                   for (int i = 0; i < dim; ++i) {
                     if (v[i] == 0.0) continue;
                     roots.push_back((b.lo[i] - x[i]) / v[i]);
                     roots.push_back((b.hi[i] - x[i]) / v[i]);
                   }
                 },
                 [&](const Annulus& a) {
                   sphere_roots(x, v, a.center, a.inner, 0, dim, roots);
                   sphere_roots(x, v, a.center, a.outer, 0, dim, roots);
                 },
                 [&](const Polydisc& p) {
                   for (int j = 0; j < dim / 2; ++j)
                     sphere_roots(x, v, p.center, p.radii[j], 2 * j, 2 * j + 2, roots);
                 },
             },
             v_);
  return roots;
}

Shape Shape::fattened(double eps) const {
  return std::visit(Overloaded{
                        [&](const Ball& b) -> Shape { return Ball{b.center, b.radius + eps}; },
                        [&](const Box& b) -> Shape {
                          Box out = b;
                          for (int i = 0; i < 4; ++i) {
                            out.lo[i] -= eps;
                            out.hi[i] += eps;
                          }
                          return out;
                        },
                        [&](const Annulus& a) -> Shape {
                          return Annulus{a.center, std::max(0.0, a.inner - eps), a.outer + eps};
                        },
                        [&](const Polydisc& p) -> Shape {
                          return Polydisc{p.center, {p.radii[0] + eps, p.radii[1] + eps}};
                        },
                    },
                    v_);
}

void Shape::validate(int dim) const {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, describe(dim) + ": " + what);
  };
  std::visit(Overloaded{
                 [&](const Ball& b) {
                   if (!(b.radius >= 0.0) || !std::isfinite(b.radius)) fail("radius must be >= 0");
                 },
                 [&](const Box& b) {
                   for (int i = 0; i < dim; ++i)
                     if (!(b.lo[i] < b.hi[i])) fail("box needs lo < hi on every axis");
                 },
                 [&](const Annulus& a) {
                   if (!(a.inner >= 0.0 && a.inner < a.outer)) fail("need 0 <= inner < outer");
                 },
                 [&](const Polydisc& p) {
                   for (int j = 0; j < dim / 2; ++j)
                     if (!(p.radii[j] > 0.0)) fail("polydisc radii must be > 0");
                 },
             },
             v_);
}

std::string Shape::describe(int dim) const {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const Ball& b) {
                   os << "ball(center=" << fmt_point(b.center, dim) << ", radius=" << b.radius << ')';
                 },
                 [&](const Box& b) {
                   os << "box(lo=" << fmt_point(b.lo, dim) << ", hi=" << fmt_point(b.hi, dim) << ')';
                 },
                 [&](const Annulus& a) {
                   os << "annulus(center=" << fmt_point(a.center, dim) << ", inner=" << a.inner
                      << ", outer=" << a.outer << ')';
                 },
                 [&](const Polydisc& p) {
                   os << "polydisc(center=" << fmt_point(p.center, dim) << ", radii=(" << p.radii[0];
                   if (dim > 2) os << ',' << p.radii[1];
                   os << "))";
                 },
             },
             v_);
  return os.str();
}

bool Geometry::in_compact(const Point& x) const {
  return std::any_of(compact.begin(), compact.end(),
                     [&](const Shape& s) { return s.contains(x, dim(), true); });
}

double Geometry::compact_entry(const Point& x, const Point& v) const {
  std::vector<double> roots;
  for (const auto& s : compact) {
    auto r = s.boundary_roots(x, v, dim());
    roots.insert(roots.end(), r.begin(), r.end());
  }
  std::sort(roots.begin(), roots.end());
  for (double t : roots) {
    if (t <= 0.0 || t > 1.0) continue;
    Point p{};
    for (int i = 0; i < dim(); ++i) p[i] = x[i] + t * v[i];
    if (in_compact(p)) return t;
  }
  return 1.0;
}

double Geometry::domain_exit(const Point& x, const Point& v) const {
  auto roots = domain.boundary_roots(x, v, dim());
  std::sort(roots.begin(), roots.end());
  for (double t : roots) {
    if (t <= 1e-14 || t > 1.0) continue;
    Point p{};
    const double probe = std::min(1.0, t * (1.0 + 1e-9) + 1e-15);
    for (int i = 0; i < dim(); ++i) p[i] = x[i] + probe * v[i];
    if (!in_domain(p)) return t;
  }
  return 1.0;
}

}  // namespace mscap
