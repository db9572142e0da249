#include "mscap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mscap/error.hpp"
#include "mscap/field.hpp"

namespace mscap {

const char* to_string(NodeClass c) {
  switch (c) {
    case NodeClass::kExterior: return "EXTERIOR";
    case NodeClass::kBoundary: return "BOUNDARY";
    case NodeClass::kInterior: return "INTERIOR";
    case NodeClass::kCompact: return "COMPACT_K";
  }
  return "?";
}

GridPtr GridDomain::build(const Geometry& geometry, double h, int stencil_radius) {
  if (geometry.n < 1 || geometry.n > kMaxComplexDim)
    throw Error(ErrorCode::kInvalidArgument, "complex dimension must be 1 or 2");
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::kInvalidArgument, "h must be > 0");
  if (stencil_radius < 1 || stencil_radius > 3)
    throw Error(ErrorCode::kInvalidArgument, "stencil radius must be in 1..3");
  if (geometry.compact.empty()) throw Error(ErrorCode::kEmptyK, "K has no components");
  const int dim = geometry.dim();
  geometry.domain.validate(dim);
  for (const auto& s : geometry.compact) s.validate(dim);

  std::shared_ptr<GridDomain> g(new GridDomain());
  g->geometry_ = geometry;
  g->h_ = h;
  g->stencil_radius_ = stencil_radius;
  g->cell_volume_ = std::pow(h, dim);

  Point lo, hi;
  geometry.domain.bounds(dim, lo, hi);
  std::size_t total = 1;
  for (int a = dim - 1; a >= 0; --a) {
    // First and last node strictly inside the bounds, then one stencil radius beyond.
    int first = static_cast<int>(std::floor(lo[a] / h)) - 1;
    while (!(first * h > lo[a])) ++first;
    int last = static_cast<int>(std::ceil(hi[a] / h)) + 1;
    while (!(last * h < hi[a])) --last;
    const int k0 = first - stencil_radius;
    const int k1 = last + stencil_radius;
    g->kmin_[a] = k0;
    g->extent_[a] = k1 - k0 + 1;
    g->stride_[a] = static_cast<std::ptrdiff_t>(total);
    total *= static_cast<std::size_t>(g->extent_[a]);
  }
  for (int a = dim; a < 4; ++a) {
    g->kmin_[a] = 0;
    g->extent_[a] = 1;
    g->stride_[a] = 0;
  }
  if (total > (std::size_t{1} << 27))
    throw Error(ErrorCode::kInvalidArgument, "grid too large for desk-scale runs");

  NodeMask in_d(total, 0), in_k(total, 0);
  for (std::size_t i = 0; i < total; ++i) {
    const Point x = g->coords(i);
    in_d[i] = geometry.in_domain(x) ? 1 : 0;
    in_k[i] = geometry.in_compact(x) ? 1 : 0;
  }
  const NodeMask reach = g->dilate(in_d, stencil_radius);
  g->cls_.assign(total, static_cast<std::uint8_t>(NodeClass::kExterior));
  std::size_t k_count = 0;
  for (std::size_t i = 0; i < total; ++i) {
    NodeClass c = NodeClass::kExterior;
    if (in_k[i] && in_d[i]) {
      c = NodeClass::kCompact;
      ++k_count;
    } else if (in_d[i]) {
      c = NodeClass::kInterior;
    } else if (reach[i]) {
      c = NodeClass::kBoundary;
    }
    g->cls_[i] = static_cast<std::uint8_t>(c);
  }
  bool k_outside_d = false;
  for (std::size_t i = 0; i < total; ++i) k_outside_d |= (in_k[i] && !in_d[i]);
  if (k_count == 0 && !k_outside_d) throw Error(ErrorCode::kEmptyK, "no grid node falls in K");
  if (k_outside_d)
    throw Error(ErrorCode::kSeparationTooSmall, "K reaches outside D on the grid");

  // Every K node must keep 3h (Euclidean) and its full stencil box inside D.
  const int scan = std::max(3, stencil_radius);
  NodeMask not_d(total, 0);
  for (std::size_t i = 0; i < total; ++i) not_d[i] = in_d[i] ? 0 : 1;
  const NodeMask near_outside = g->dilate(not_d, scan);
  std::vector<MultiIndex> offsets;
  {
    MultiIndex d{};
    const int lim[4] = {scan, dim > 1 ? scan : 0, dim > 2 ? scan : 0, dim > 3 ? scan : 0};
    for (d[0] = -lim[0]; d[0] <= lim[0]; ++d[0])
      for (d[1] = -lim[1]; d[1] <= lim[1]; ++d[1])
        for (d[2] = -lim[2]; d[2] <= lim[2]; ++d[2])
          for (d[3] = -lim[3]; d[3] <= lim[3]; ++d[3]) {
            int r2 = 0, mx = 0;
            for (int a = 0; a < 4; ++a) {
              r2 += d[a] * d[a];
              mx = std::max(mx, std::abs(d[a]));
            }
            if (r2 < 9 || mx <= stencil_radius) offsets.push_back(d);
          }
  }
  for (std::size_t i = 0; i < total; ++i) {
    if (g->cls_[i] != static_cast<std::uint8_t>(NodeClass::kCompact) || !near_outside[i]) continue;
    const MultiIndex k = g->multi_index(i);
    for (const auto& d : offsets) {
      MultiIndex q{k[0] + d[0], k[1] + d[1], k[2] + d[2], k[3] + d[3]};
      if (!g->has_node(q) || !in_d[g->flat_index(q)]) {
        const Point x = g->coords(i);
        throw Error(ErrorCode::kSeparationTooSmall,
                    "K node at distance < 3h from the complement of D (x1=" +
                        std::to_string(x[0]) + ", y1=" + std::to_string(x[1]) + ")");
      }
    }
  }

  g->counts_.fill(0);
  for (auto c : g->cls_) ++g->counts_[c];
  return g;
}

GridPtr GridDomain::refine(int factor) const {
  if (factor < 2) throw Error(ErrorCode::kInvalidArgument, "refinement factor must be >= 2");
  return build(geometry_, h_ / factor, stencil_radius_);
}

MultiIndex GridDomain::multi_index(std::size_t i) const {
  MultiIndex k{0, 0, 0, 0};
  for (int a = 0; a < dim(); ++a) {
    const auto s = static_cast<std::size_t>(stride_[a]);
    k[a] = static_cast<int>((i / s) % static_cast<std::size_t>(extent_[a])) + kmin_[a];
  }
  return k;
}

std::size_t GridDomain::flat_index(const MultiIndex& k) const {
  std::size_t i = 0;
  for (int a = 0; a < dim(); ++a)
    i += static_cast<std::size_t>(k[a] - kmin_[a]) * static_cast<std::size_t>(stride_[a]);
  return i;
}

bool GridDomain::has_node(const MultiIndex& k) const {
  for (int a = 0; a < dim(); ++a)
    if (k[a] < kmin_[a] || k[a] >= kmin_[a] + extent_[a]) return false;
  for (int a = dim(); a < 4; ++a)
    if (k[a] != 0) return false;
  return true;
}

Point GridDomain::coords(std::size_t i) const {
  const MultiIndex k = multi_index(i);
  Point x{};
  for (int a = 0; a < dim(); ++a) x[a] = k[a] * h_;
  return x;
}

std::ptrdiff_t GridDomain::offset(const MultiIndex& delta) const {
  std::ptrdiff_t o = 0;
  for (int a = 0; a < dim(); ++a) o += delta[a] * stride_[a];
  return o;
}

bool GridDomain::locate(const Point& x, std::size_t& index) const {
  MultiIndex k{0, 0, 0, 0};
  for (int a = 0; a < dim(); ++a) {
    const double q = x[a] / h_;
    k[a] = static_cast<int>(std::lround(q));
    if (std::abs(q - k[a]) > 1e-9) return false;
  }
  if (!has_node(k)) return false;
  index = flat_index(k);
  return true;
}

Point GridDomain::bbox_lo() const {
  Point p{};
  for (int a = 0; a < dim(); ++a) p[a] = kmin_[a] * h_;
  return p;
}

Point GridDomain::bbox_hi() const {
  Point p{};
  for (int a = 0; a < dim(); ++a) p[a] = (kmin_[a] + extent_[a] - 1) * h_;
  return p;
}

NodeMask GridDomain::mask(NodeClass c) const {
  NodeMask m(size(), 0);
  const auto v = static_cast<std::uint8_t>(c);
  for (std::size_t i = 0; i < size(); ++i) m[i] = cls_[i] == v;
  return m;
}

NodeMask GridDomain::mask(Region r) const {
  NodeMask m(size(), 0);
  const auto ext = static_cast<std::uint8_t>(NodeClass::kExterior);
  const auto bnd = static_cast<std::uint8_t>(NodeClass::kBoundary);
  const auto in = static_cast<std::uint8_t>(NodeClass::kInterior);
  const auto kk = static_cast<std::uint8_t>(NodeClass::kCompact);
  switch (r) {
    case Region::kNonExterior:
      for (std::size_t i = 0; i < size(); ++i) m[i] = cls_[i] != ext;
      break;
    case Region::kDomain:
      for (std::size_t i = 0; i < size(); ++i) m[i] = cls_[i] != ext && cls_[i] != bnd;
      break;
    case Region::kCompact:
      for (std::size_t i = 0; i < size(); ++i) m[i] = cls_[i] == kk;
      break;
    case Region::kFree:
      for (std::size_t i = 0; i < size(); ++i) m[i] = cls_[i] == in;
      break;
    case Region::kCompactWithCollar:
      return compact_with_collar(stencil_radius_);
  }
  return m;
}

NodeMask GridDomain::compact_with_collar(int width) const {
  NodeMask k = mask(NodeClass::kCompact);
  NodeMask grown = dilate(k, width);
  const auto in = static_cast<std::uint8_t>(NodeClass::kInterior);
  for (std::size_t i = 0; i < size(); ++i) grown[i] = k[i] || (grown[i] && cls_[i] == in);
  return grown;
}

NodeMask GridDomain::free_core(int margin) const {
  const auto in = static_cast<std::uint8_t>(NodeClass::kInterior);
  NodeMask obstacles(size(), 0);
  for (std::size_t i = 0; i < size(); ++i) obstacles[i] = cls_[i] != in;
  NodeMask near = dilate(obstacles, margin);
  NodeMask out(size(), 0);
  for (std::size_t i = 0; i < size(); ++i) out[i] = cls_[i] == in && !near[i];
  return out;
}

NodeMask GridDomain::boundary_ring() const {
  NodeMask b = mask(NodeClass::kBoundary);
  NodeMask near = dilate(b, 1);
  const auto in = static_cast<std::uint8_t>(NodeClass::kInterior);
  for (std::size_t i = 0; i < size(); ++i) near[i] = near[i] && cls_[i] == in;
  return near;
}

NodeMask GridDomain::dilate(const NodeMask& m, int radius) const {
  NodeMask cur = m;
  NodeMask next(m.size(), 0);
  for (int a = 0; a < dim(); ++a) {
    const auto s = static_cast<std::size_t>(stride_[a]);
    const auto e = static_cast<std::size_t>(extent_[a]);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const std::size_t pos = (i / s) % e;
      std::uint8_t v = 0;
      const std::size_t lo = pos >= static_cast<std::size_t>(radius) ? pos - radius : 0;
      const std::size_t hi = std::min(e - 1, pos + static_cast<std::size_t>(radius));
      for (std::size_t q = lo; q <= hi && !v; ++q) v = cur[i - pos * s + q * s];
      next[i] = v;
    }
    std::swap(cur, next);
  }
  return cur;
}

bool GridDomain::same_layout(const GridDomain& o) const {
  return this == &o || (h_ == o.h_ && kmin_ == o.kmin_ && extent_ == o.extent_ &&
                        stencil_radius_ == o.stencil_radius_ && geometry_ == o.geometry_);
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(GridPtr grid, double fill)
    : grid_(std::move(grid)), values_(grid_->size(), fill) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (grid_->cls(i) == NodeClass::kExterior) values_[i] = nan;
}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size())
    throw Error(ErrorCode::kDomainMismatch, "value count does not match the grid");
}

ScalarField ScalarField::sample(GridPtr grid, const std::function<double(const Point&)>& f) {
  ScalarField out(grid);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (grid->cls(i) != NodeClass::kExterior) out.values_[i] = f(grid->coords(i));
  return out;
}

void ScalarField::require_same_grid(const ScalarField& other) const {
  if (!grid_ || !other.grid_ || !grid_->same_layout(*other.grid_))
    throw Error(ErrorCode::kDomainMismatch, "fields live on different grids");
}

ScalarField ScalarField::combine(double a, const ScalarField& other, double b) const {
  require_same_grid(other);
  ScalarField out(grid_);
  for (std::size_t i = 0; i < size(); ++i)
    if (grid_->cls(i) != NodeClass::kExterior) out.values_[i] = a * values_[i] + b * other.values_[i];
  return out;
}

double integrate(const ScalarField& f, const NodeMask& selection) {
  if (selection.size() != f.size())
    throw Error(ErrorCode::kDomainMismatch, "selection mask does not match the field");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (selection[i]) s += f[i];
  return s * f.grid().cell_volume();
}

double integrate(const ScalarField& f, Region region) {
  return integrate(f, f.grid().mask(region));
}

}  // namespace mscap
