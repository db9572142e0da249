#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "mscap/geometry.hpp"

namespace mscap {

enum class NodeClass : std::uint8_t { kExterior = 0, kBoundary = 1, kInterior = 2, kCompact = 3 };

const char* to_string(NodeClass c);

/// Per-node selection flags, one byte per grid node.
using NodeMask = std::vector<std::uint8_t>;

enum class Region {
  kNonExterior,        ///< every node carrying data
  kDomain,             ///< nodes of D: INTERIOR and COMPACT_K
  kCompact,            ///< COMPACT_K
  kFree,               ///< INTERIOR (D minus K)
  kCompactWithCollar,  ///< K plus the free nodes within one stencil radius of K
};

using MultiIndex = std::array<int, 4>;

/// Uniform Cartesian grid over R^{2n} carrying the masks of a condenser (K, D).
///
/// Node k sits at k*h (k integer per axis), so refinement by an integer factor
/// nests the coarse nodes into the fine grid. D is rasterized with open
/// membership, K with closed membership. BOUNDARY is the layer of non-D nodes
/// reachable from D inside a max-norm box of radius `stencil_radius`; it holds
/// the Dirichlet data.
class GridDomain {
 public:
  /// Throws SEPARATION_TOO_SMALL when a K node lies within 3h (or within the
  /// stencil box) of a node outside D, EMPTY_K when no node falls in K.
  static std::shared_ptr<const GridDomain> build(const Geometry& geometry, double h,
                                                 int stencil_radius = 1);

  std::shared_ptr<const GridDomain> refine(int factor) const;

  const Geometry& geometry() const { return geometry_; }
  int n() const { return geometry_.n; }
  int dim() const { return geometry_.dim(); }
  double h() const { return h_; }
  int stencil_radius() const { return stencil_radius_; }
  double cell_volume() const { return cell_volume_; }

  std::size_t size() const { return cls_.size(); }
  int extent(int axis) const { return extent_[axis]; }
  int kmin(int axis) const { return kmin_[axis]; }
  std::ptrdiff_t stride(int axis) const { return stride_[axis]; }

  NodeClass cls(std::size_t i) const { return static_cast<NodeClass>(cls_[i]); }
  const std::vector<std::uint8_t>& classes() const { return cls_; }
  std::size_t count(NodeClass c) const { return counts_[static_cast<int>(c)]; }

  MultiIndex multi_index(std::size_t i) const;
  std::size_t flat_index(const MultiIndex& k) const;
  bool has_node(const MultiIndex& k) const;
  Point coords(std::size_t i) const;
  std::ptrdiff_t offset(const MultiIndex& delta) const;
  /// Index of the node at integer position k (in units of h), if on the grid.
  bool locate(const Point& x, std::size_t& index) const;

  Point bbox_lo() const;
  Point bbox_hi() const;

  NodeMask mask(Region r) const;
  NodeMask mask(NodeClass c) const;
  /// K plus free nodes within `width` (max-norm, in nodes) of K.
  NodeMask compact_with_collar(int width) const;
  /// Free nodes farther than `margin` nodes (max-norm) from K and from every node outside D.
  NodeMask free_core(int margin) const;
  /// Free nodes with a BOUNDARY node among their max-norm neighbours.
  NodeMask boundary_ring() const;
  /// Max-norm dilation of a mask by `radius` nodes.
  NodeMask dilate(const NodeMask& m, int radius) const;

  bool same_layout(const GridDomain& other) const;

 private:
  GridDomain() = default;

  Geometry geometry_;
  double h_ = 0.0;
  double cell_volume_ = 0.0;
  int stencil_radius_ = 1;
  std::array<int, 4> kmin_{};
  std::array<int, 4> extent_{1, 1, 1, 1};
  std::array<std::ptrdiff_t, 4> stride_{};
  std::vector<std::uint8_t> cls_;
  std::array<std::size_t, 4> counts_{};
};

using GridPtr = std::shared_ptr<const GridDomain>;

}  // namespace mscap
