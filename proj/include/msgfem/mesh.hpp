#pragma once

#include "msgfem/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace msgfem {

enum class BoundaryKind : std::uint8_t { free, neumann, dirichlet };

inline const char* to_string(BoundaryKind k)
{
  switch (k) {
  case BoundaryKind::free: return "free";
  case BoundaryKind::neumann: return "neumann";
  case BoundaryKind::dirichlet: return "dirichlet";
  }
  return "?";
}

/// Face selector index for the axis-aligned faces of the box: 2 * axis + side,
/// side 0 is the minimum coordinate, side 1 the maximum.
inline constexpr int face_id(int axis, int side) { return 2 * axis + side; }

inline constexpr const char* face_names[6] = {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"};

/// Tag assigned to every boundary facet lying on a given face of the box.
struct BoundaryRule {
  std::array<BoundaryKind, 6> faces{BoundaryKind::free, BoundaryKind::free, BoundaryKind::free,
                                    BoundaryKind::free, BoundaryKind::free, BoundaryKind::free};
};

struct Ply {
  double thickness_fraction = 1.0;
  int material = 0;
};

struct BoundaryFacet {
  Index element;
  int axis;
  int side;
  BoundaryKind kind;
};

/// Structured quadrilateral (2D) or hexahedral (3D) mesh of a box with
/// plies stacked along the last axis.
///
/// Nodes are numbered lexicographically (x fastest), elements likewise.
/// Element connectivity follows the VTK_QUAD / VTK_HEXAHEDRON orderings.
class Mesh {
public:
  int dimension() const { return dim_; }
  int stacking_axis() const { return dim_ - 1; }
  Index num_nodes() const { return static_cast<Index>(nodes_.size()); }
  Index num_elements() const { return static_cast<Index>(material_.size()); }
  int nodes_per_element() const { return 1 << dim_; }
  int dofs_per_node() const { return dim_; }
  Index num_dofs() const { return num_nodes() * dim_; }

  const std::array<Index, 3>& counts() const { return counts_; }
  const std::array<double, 3>& extents() const { return extents_; }
  const std::vector<Point>& nodes() const { return nodes_; }
  const Point& node(Index n) const { return nodes_[static_cast<std::size_t>(n)]; }
  int material(Index e) const { return material_[static_cast<std::size_t>(e)]; }
  const std::vector<int>& materials() const { return material_; }
  const BoundaryRule& boundary_rule() const { return rule_; }
  BoundaryKind face_kind(int axis, int side) const { return rule_.faces[face_id(axis, side)]; }

  std::span<const Index> element_nodes(Index e) const
  {
    return {connectivity_.data() + e * nodes_per_element(), static_cast<std::size_t>(nodes_per_element())};
  }

  /// Elements sharing node `n`.
  std::span<const Index> node_elements(Index n) const
  {
    const auto b = node_elem_offsets_[static_cast<std::size_t>(n)];
    const auto e = node_elem_offsets_[static_cast<std::size_t>(n) + 1];
    return {node_elem_.data() + b, static_cast<std::size_t>(e - b)};
  }

  std::array<Index, 3> element_ijk(Index e) const
  {
    std::array<Index, 3> ijk{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
      ijk[a] = e % counts_[a];
      e /= counts_[a];
    }
    return ijk;
  }

  Index element_at(const std::array<Index, 3>& ijk) const
  {
    Index e = 0;
    for (int a = dim_ - 1; a >= 0; --a) e = e * counts_[a] + ijk[a];
    return e;
  }

  Index node_at(const std::array<Index, 3>& ijk) const
  {
    Index n = 0;
    for (int a = dim_ - 1; a >= 0; --a) n = n * (counts_[a] + 1) + ijk[a];
    return n;
  }

  /// Face neighbour across face (axis, side), empty on the physical boundary.
  std::optional<Index> neighbor(Index e, int axis, int side) const
  {
    auto ijk = element_ijk(e);
    if (side == 0) {
      if (ijk[axis] == 0) return std::nullopt;
      --ijk[axis];
    } else {
      if (ijk[axis] + 1 == counts_[axis]) return std::nullopt;
      ++ijk[axis];
    }
    return element_at(ijk);
  }

  /// Nodes of the element face (axis, side); 2 nodes in 2D, 4 in 3D.
  std::vector<Index> face_nodes(Index e, int axis, int side) const
  {
    std::vector<Index> out;
    const auto nodes = element_nodes(e);
    for (int a = 0; a < nodes_per_element(); ++a)
      if (local_offset(a, axis) == side) out.push_back(nodes[static_cast<std::size_t>(a)]);
    return out;
  }

  /// Offset (0 or 1) of local node `a` along `axis` in the reference element.
  int local_offset(int a, int axis) const
  {
    static constexpr int hex[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                      {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
    return hex[a][axis];
  }

  std::vector<Point> element_corners(Index e) const
  {
    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(nodes_per_element()));
    for (Index n : element_nodes(e)) out.push_back(node(n));
    return out;
  }

  Point element_centroid(Index e) const
  {
    Point c = Point::Zero();
    for (Index n : element_nodes(e)) c += node(n);
    return c / nodes_per_element();
  }

  std::vector<BoundaryFacet> boundary_facets() const
  {
    std::vector<BoundaryFacet> out;
    for (Index e = 0; e < num_elements(); ++e)
      for (int axis = 0; axis < dim_; ++axis)
        for (int side = 0; side < 2; ++side)
          if (!neighbor(e, axis, side)) out.push_back({e, axis, side, face_kind(axis, side)});
    return out;
  }

  /// Ply index of each element along the stacking axis.
  int element_ply(Index e) const { return ply_of_layer_[static_cast<std::size_t>(element_ijk(e)[stacking_axis()])]; }

private:
  friend Mesh build_structured_mesh(int, const std::array<double, 3>&, const std::array<Index, 3>&,
                                    const std::vector<Ply>&, const BoundaryRule&);

  int dim_ = 3;
  std::array<Index, 3> counts_{1, 1, 1};
  std::array<double, 3> extents_{1, 1, 1};
  std::vector<Point> nodes_;
  std::vector<Index> connectivity_;
  std::vector<int> material_;
  std::vector<int> ply_of_layer_;
  std::vector<Index> node_elem_offsets_;
  std::vector<Index> node_elem_;
  BoundaryRule rule_;
};

/// Builds a structured laminated box. `counts` and `extents` are read for the
/// first `dim` axes; plies are stacked along the last axis with their element
/// layers uniformly spaced inside each ply.
inline Mesh build_structured_mesh(int dim, const std::array<double, 3>& extents, const std::array<Index, 3>& counts,
                                  const std::vector<Ply>& plies, const BoundaryRule& rule = {})
{
  if (dim != 2 && dim != 3) throw InvalidArgument("mesh dimension must be 2 or 3");
  for (int a = 0; a < dim; ++a) {
    if (!(extents[a] > 0)) throw InvalidArgument("mesh extents must be positive");
    if (counts[a] < 1) throw InvalidArgument("element counts must be at least 1");
  }
  if (plies.empty()) throw InvalidArgument("at least one ply is required");
  double total = 0;
  for (const auto& p : plies) {
    if (!(p.thickness_fraction > 0)) throw InvalidArgument("ply thickness fractions must be positive");
    if (p.material < 0) throw InvalidArgument("ply material index must be non-negative");
    total += p.thickness_fraction;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("ply thickness fractions must sum to 1");

  const int stack = dim - 1;
  const auto nply = static_cast<Index>(plies.size());
  if (counts[stack] % nply != 0)
    throw InvalidArgument("through-thickness element count must be a multiple of the ply count");
  const Index per_ply = counts[stack] / nply;

  Mesh mesh;
  mesh.dim_ = dim;
  mesh.rule_ = rule;
  mesh.counts_ = {1, 1, 1};
  mesh.extents_ = {0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    mesh.counts_[a] = counts[a];
    mesh.extents_[a] = extents[a];
  }

  std::array<std::vector<double>, 3> coords;
  for (int a = 0; a < dim; ++a) {
    auto& c = coords[a];
    c.resize(static_cast<std::size_t>(counts[a] + 1));
    if (a != stack) {
      for (Index i = 0; i <= counts[a]; ++i) c[i] = extents[a] * static_cast<double>(i) / counts[a];
    } else {
      double z0 = 0;
      Index idx = 0;
      c[0] = 0;
      for (const auto& p : plies) {
        const double dz = p.thickness_fraction * extents[a] / per_ply;
        for (Index k = 1; k <= per_ply; ++k) c[++idx] = z0 + dz * k;
        z0 += p.thickness_fraction * extents[a];
      }
      c.back() = extents[a];
    }
  }

  const Index nx = counts[0] + 1, ny = counts[1] + 1, nz = dim == 3 ? counts[2] + 1 : 1;
  mesh.nodes_.reserve(static_cast<std::size_t>(nx * ny * nz));
  for (Index k = 0; k < nz; ++k)
    for (Index j = 0; j < ny; ++j)
      for (Index i = 0; i < nx; ++i)
        mesh.nodes_.emplace_back(coords[0][i], coords[1][j], dim == 3 ? coords[2][k] : 0.0);

  mesh.ply_of_layer_.resize(static_cast<std::size_t>(counts[stack]));
  for (Index l = 0; l < counts[stack]; ++l) mesh.ply_of_layer_[l] = static_cast<int>(l / per_ply);

  const Index ne = dim == 3 ? counts[0] * counts[1] * counts[2] : counts[0] * counts[1];
  const int npe = 1 << dim;
  mesh.connectivity_.reserve(static_cast<std::size_t>(ne * npe));
  mesh.material_.reserve(static_cast<std::size_t>(ne));
  for (Index e = 0; e < ne; ++e) {
    const auto ijk = mesh.element_ijk(e);
    for (int a = 0; a < npe; ++a) {
      std::array<Index, 3> n = ijk;
      for (int ax = 0; ax < dim; ++ax) n[ax] += mesh.local_offset(a, ax);
      mesh.connectivity_.push_back(mesh.node_at(n));
    }
    mesh.material_.push_back(plies[static_cast<std::size_t>(mesh.ply_of_layer_[ijk[stack]])].material);
  }

  // node -> element incidence (CSR)
  const Index nn = mesh.num_nodes();
  mesh.node_elem_offsets_.assign(static_cast<std::size_t>(nn + 1), 0);
  for (Index n : mesh.connectivity_) ++mesh.node_elem_offsets_[static_cast<std::size_t>(n + 1)];
  for (Index n = 0; n < nn; ++n) mesh.node_elem_offsets_[n + 1] += mesh.node_elem_offsets_[n];
  mesh.node_elem_.resize(mesh.connectivity_.size());
  auto fill = mesh.node_elem_offsets_;
  for (Index e = 0; e < ne; ++e)
    for (Index n : mesh.element_nodes(e)) mesh.node_elem_[static_cast<std::size_t>(fill[n]++)] = e;

  return mesh;
}

/// Elements sharing at least one node with `e` (excluding `e`), sorted.
inline std::vector<Index> node_neighbors(const Mesh& mesh, Index e)
{
  std::vector<Index> out;
  for (Index n : mesh.element_nodes(e))
    for (Index f : mesh.node_elements(n))
      if (f != e) out.push_back(f);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

} // namespace msgfem
