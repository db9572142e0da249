#pragma once

#include <array>
#include <string>
#include <variant>
#include <vector>

namespace mscap {

/// A point of C^n = R^{2n} stored as (x1, y1, x2, y2); entries past 2n are zero.
using Point = std::array<double, 4>;

inline constexpr int kMaxComplexDim = 2;

struct Ball {
  Point center{};
  double radius = 0.0;
  bool operator==(const Ball&) const = default;
};

struct Box {
  Point lo{};
  Point hi{};
  bool operator==(const Box&) const = default;
};

struct Annulus {
  Point center{};
  double inner = 0.0;
  double outer = 0.0;
  bool operator==(const Annulus&) const = default;
};

/// Product of discs |z_j - c_j| <= radii[j].
struct Polydisc {
  Point center{};
  std::array<double, 2> radii{};
  bool operator==(const Polydisc&) const = default;
};

/// Geometric primitive used to rasterize D and the components of K.
///
/// Membership is open (strict) when the shape plays the role of the domain D
/// and closed when it is a component of the compact set K. A ball of radius
/// zero is a single point.
class Shape {
 public:
  using Variant = std::variant<Ball, Box, Annulus, Polydisc>;

  Shape() = default;
  Shape(Ball b) : v_(b) {}          // NOLINT(google-explicit-constructor)
  Shape(Box b) : v_(b) {}           // NOLINT(google-explicit-constructor)
  Shape(Annulus a) : v_(a) {}       // NOLINT(google-explicit-constructor)
  Shape(Polydisc p) : v_(p) {}      // NOLINT(google-explicit-constructor)

  static Shape ball(const Point& center, double radius) { return Ball{center, radius}; }
  static Shape point(const Point& at) { return Ball{at, 0.0}; }
  static Shape box(const Point& lo, const Point& hi) { return Box{lo, hi}; }
  static Shape annulus(const Point& center, double inner, double outer) {
    return Annulus{center, inner, outer};
  }
  static Shape polydisc(const Point& center, std::array<double, 2> radii) {
    return Polydisc{center, radii};
  }

  const Variant& variant() const { return v_; }

  bool contains(const Point& x, int dim, bool closed) const;

  /// Axis-aligned bounds of the shape in the first `dim` coordinates.
  void bounds(int dim, Point& lo, Point& hi) const;

  /// Parameters t of the points x + t*v where the segment meets the shape's
  /// boundary surfaces (unsorted, may include values outside [0, 1]).
  std::vector<double> boundary_roots(const Point& x, const Point& v, int dim) const;

  /// The same primitive grown by eps in every direction.
  Shape fattened(double eps) const;

  /// Throws INVALID_ARGUMENT for negative radii or empty boxes.
  void validate(int dim) const;

  std::string describe(int dim) const;

  bool operator==(const Shape&) const = default;

 private:
  Variant v_{Ball{}};
};

/// Generators of a condenser: the domain D and the union of compact pieces K.
struct Geometry {
  int n = 1;
  Shape domain;
  std::vector<Shape> compact;

  int dim() const { return 2 * n; }
  bool in_domain(const Point& x) const { return domain.contains(x, dim(), false); }
  bool in_compact(const Point& x) const;
  /// First t in (0, 1] at which x + t*v enters K; 1 when no crossing is found.
  double compact_entry(const Point& x, const Point& v) const;
  /// First t in (0, 1] at which x + t*v leaves D; 1 when no crossing is found.
  double domain_exit(const Point& x, const Point& v) const;

  bool operator==(const Geometry&) const = default;
};

double squared_norm(const Point& x, int dim);

}  // namespace mscap
