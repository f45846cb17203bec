#pragma once

#include "msgfem/mesh.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <ostream>
#include <span>
#include <vector>

namespace msgfem {

enum class PartitionStrategy { structured_blocks, greedy_graph };

namespace detail {

inline std::vector<int> structured_partition(const Mesh& mesh, int n, std::array<int, 3> blocks)
{
  const int dim = mesh.dimension();
  if (blocks[0] <= 0 && blocks[1] <= 0 && blocks[2] <= 0) blocks = {n, 1, 1};
  for (int a = 0; a < 3; ++a)
    if (blocks[a] <= 0 || a >= dim) blocks[a] = a < dim ? std::max(blocks[a], 1) : 1;
  if (blocks[0] * blocks[1] * blocks[2] != n)
    throw InvalidArgument("structured partition: block counts per axis must multiply to the subdomain count");
  for (int a = 0; a < dim; ++a)
    if (blocks[a] > mesh.counts()[a]) throw InvalidArgument("structured partition: more blocks than elements along an axis");

  std::vector<int> owner(static_cast<std::size_t>(mesh.num_elements()));
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    const auto ijk = mesh.element_ijk(e);
    std::array<Index, 3> b{0, 0, 0};
    for (int a = 0; a < dim; ++a) b[a] = ijk[a] * blocks[a] / mesh.counts()[a];
    owner[static_cast<std::size_t>(e)] = static_cast<int>(b[0] + blocks[0] * (b[1] + blocks[1] * b[2]));
  }
  return owner;
}

/// Face-adjacent elements.
inline std::vector<Index> face_neighbors(const Mesh& mesh, Index e)
{
  std::vector<Index> out;
  for (int axis = 0; axis < mesh.dimension(); ++axis)
    for (int side = 0; side < 2; ++side)
      if (auto nb = mesh.neighbor(e, axis, side)) out.push_back(*nb);
  return out;
}

/// Greedy graph growing: each part is a BFS ball over face adjacency, seeded at
/// the first unassigned element in a BFS sweep from element 0. Leftover
/// fragments join an adjacent part, so every part stays connected.
inline std::vector<int> greedy_partition(const Mesh& mesh, int n)
{
  const Index ne = mesh.num_elements();
  std::vector<int> owner(static_cast<std::size_t>(ne), -1);

  std::vector<Index> sweep;
  sweep.reserve(static_cast<std::size_t>(ne));
  {
    std::vector<char> seen(static_cast<std::size_t>(ne), 0);
    std::deque<Index> q{0};
    seen[0] = 1;
    while (!q.empty()) {
      const Index e = q.front();
      q.pop_front();
      sweep.push_back(e);
      for (Index f : face_neighbors(mesh, e))
        if (!seen[static_cast<std::size_t>(f)]) {
          seen[static_cast<std::size_t>(f)] = 1;
          q.push_back(f);
        }
    }
  }

  Index assigned = 0;
  std::size_t cursor = 0;
  for (int part = 0; part < n; ++part) {
    while (cursor < sweep.size() && owner[static_cast<std::size_t>(sweep[cursor])] >= 0) ++cursor;
    if (cursor == sweep.size()) break;
    const Index target = (ne - assigned) / (n - part);
    std::deque<Index> q{sweep[cursor]};
    owner[static_cast<std::size_t>(sweep[cursor])] = part;
    Index size = 1;
    while (!q.empty() && size < target) {
      const Index e = q.front();
      q.pop_front();
      for (Index f : face_neighbors(mesh, e)) {
        if (size >= target) break;
        if (owner[static_cast<std::size_t>(f)] >= 0) continue;
        owner[static_cast<std::size_t>(f)] = part;
        q.push_back(f);
        ++size;
      }
    }
    assigned += size;
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (Index e : sweep) {
      if (owner[static_cast<std::size_t>(e)] >= 0) continue;
      for (Index f : face_neighbors(mesh, e))
        if (owner[static_cast<std::size_t>(f)] >= 0) {
          owner[static_cast<std::size_t>(e)] = owner[static_cast<std::size_t>(f)];
          changed = true;
          break;
        }
    }
  }
  return owner;
}

} // namespace detail

/// Element -> subdomain owner map (non-overlapping subdomains).
/// `blocks` gives the structured block count per axis; all zero means slabs along x.
inline std::vector<int> partition_nonoverlapping(const Mesh& mesh, int n, PartitionStrategy strategy,
                                                 std::array<int, 3> blocks = {0, 0, 0})
{
  if (n < 1) throw InvalidArgument("partition: subdomain count must be positive");
  if (n > mesh.num_elements()) throw InvalidArgument("partition: more subdomains than elements");
  if (strategy == PartitionStrategy::structured_blocks) return detail::structured_partition(mesh, n, blocks);
  return detail::greedy_partition(mesh, n);
}

/// Adds `layers` rings of node-sharing neighbours to a sorted element set.
inline std::vector<Index> grow_layers(const Mesh& mesh, std::vector<Index> elements, int layers)
{
  if (layers < 0) throw InvalidArgument("grow_overlap: layer count must be non-negative");
  std::vector<char> member(static_cast<std::size_t>(mesh.num_elements()), 0);
  for (Index e : elements) member[static_cast<std::size_t>(e)] = 1;
  std::vector<Index> frontier = elements;
  for (int l = 0; l < layers && !frontier.empty(); ++l) {
    std::vector<Index> next;
    for (Index e : frontier)
      for (Index n : mesh.element_nodes(e))
        for (Index f : mesh.node_elements(n))
          if (!member[static_cast<std::size_t>(f)]) {
            member[static_cast<std::size_t>(f)] = 1;
            next.push_back(f);
          }
    elements.insert(elements.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  std::sort(elements.begin(), elements.end());
  return elements;
}

/// Per-subdomain element sets grown by `layers` from the owner map.
inline std::vector<std::vector<Index>> grow_overlap(const Mesh& mesh, std::span<const int> owner, int layers)
{
  const int n = owner.empty() ? 0 : *std::max_element(owner.begin(), owner.end()) + 1;
  std::vector<std::vector<Index>> sets(static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < owner.size(); ++e) sets[static_cast<std::size_t>(owner[e])].push_back(static_cast<Index>(e));
  for (auto& s : sets) s = grow_layers(mesh, std::move(s), layers);
  return sets;
}

/// Nodes on the boundary of an element set, split by facet type. Artificial
/// facets are shared with an element outside the set.
struct BoundaryNodes {
  std::vector<Index> all;        ///< nodes of the set's elements, sorted
  std::vector<Index> artificial; ///< on facets shared with elements outside the set
  std::vector<Index> dirichlet;  ///< on physical Dirichlet facets
  std::vector<Index> neumann;    ///< on physical Neumann or free facets
};

inline BoundaryNodes boundary_nodes(const Mesh& mesh, std::span<const Index> elements)
{
  std::vector<char> member(static_cast<std::size_t>(mesh.num_elements()), 0);
  for (Index e : elements) member[static_cast<std::size_t>(e)] = 1;
  BoundaryNodes out;
  for (Index e : elements) {
    for (Index n : mesh.element_nodes(e)) out.all.push_back(n);
    for (int axis = 0; axis < mesh.dimension(); ++axis)
      for (int side = 0; side < 2; ++side) {
        const auto nb = mesh.neighbor(e, axis, side);
        std::vector<Index>* target = nullptr;
        if (nb) {
          if (!member[static_cast<std::size_t>(*nb)]) target = &out.artificial;
        } else {
          target = mesh.face_kind(axis, side) == BoundaryKind::dirichlet ? &out.dirichlet : &out.neumann;
        }
        if (target)
          for (Index n : mesh.face_nodes(e, axis, side)) target->push_back(n);
      }
  }
  for (auto* v : {&out.all, &out.artificial, &out.dirichlet, &out.neumann}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  return out;
}

/// Global DoFs of an element set, split into
///   B1: interior and Neumann-boundary DoFs,
///   B2: DoFs on the artificial boundary (not Dirichlet),
///   B3: DoFs on the Dirichlet boundary (wins where it meets the artificial boundary).
struct DofClasses {
  std::vector<Index> b1, b2, b3;
};

inline DofClasses classify_dofs(const Mesh& mesh, std::span<const Index> elements)
{
  const auto bn = boundary_nodes(mesh, elements);
  const int dim = mesh.dimension();
  DofClasses c;
  for (Index n : bn.all) {
    auto& target = std::binary_search(bn.dirichlet.begin(), bn.dirichlet.end(), n)       ? c.b3
                   : std::binary_search(bn.artificial.begin(), bn.artificial.end(), n) ? c.b2
                                                                                       : c.b1;
    for (int k = 0; k < dim; ++k) target.push_back(n * dim + k);
  }
  return c;
}

struct Subdomain {
  std::vector<Index> owned;       ///< non-overlapping elements
  std::vector<Index> overlap;     ///< owned grown by `overlap` layers
  std::vector<Index> oversampled; ///< owned grown by `oversampling` layers
  std::vector<Index> dofs;        ///< sorted global DoFs of the oversampled set
  std::vector<Index> b1, b2, b3;  ///< positions into `dofs`

  Index size() const { return static_cast<Index>(dofs.size()); }
  bool touches_dirichlet() const { return !b3.empty(); }
};

struct Decomposition {
  int overlap = 1;
  int oversampling = 1;
  std::vector<int> owner;
  std::vector<Subdomain> subdomains;
  int coloring_constant = 0; ///< k0: max number of oversampled subdomains sharing a DoF

  int size() const { return static_cast<int>(subdomains.size()); }

  /// Subdomains owning an element of the oversampled set of `j`.
  std::vector<int> neighbors(int j) const
  {
    std::vector<int> out;
    for (Index e : subdomains[static_cast<std::size_t>(j)].oversampled) {
      const int o = owner[static_cast<std::size_t>(e)];
      if (o != j) out.push_back(o);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

inline std::vector<Index> positions_in(std::span<const Index> sorted, std::span<const Index> values)
{
  std::vector<Index> out;
  out.reserve(values.size());
  for (Index v : values) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), v);
    out.push_back(static_cast<Index>(it - sorted.begin()));
  }
  return out;
}

/// Overlapping (o layers) and oversampled (o* layers) subdomains with DoF classes.
inline Decomposition decompose(const Mesh& mesh, std::vector<int> owner, int overlap, int oversampling)
{
  if (overlap < 0 || oversampling < overlap)
    throw InvalidArgument("decompose: need 0 <= overlap <= oversampling");
  if (static_cast<Index>(owner.size()) != mesh.num_elements())
    throw InvalidArgument("decompose: owner map size does not match the mesh");
  Decomposition d;
  d.overlap = overlap;
  d.oversampling = oversampling;
  d.owner = std::move(owner);
  const int n = *std::max_element(d.owner.begin(), d.owner.end()) + 1;
  d.subdomains.resize(static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < d.owner.size(); ++e) {
    if (d.owner[e] < 0) throw InvalidArgument("decompose: unassigned element");
    d.subdomains[static_cast<std::size_t>(d.owner[e])].owned.push_back(static_cast<Index>(e));
  }

  const int dim = mesh.dimension();
  std::vector<int> multiplicity(static_cast<std::size_t>(mesh.num_nodes()), 0);
  for (auto& s : d.subdomains) {
    if (s.owned.empty()) throw InvalidArgument("decompose: empty subdomain");
    s.overlap = grow_layers(mesh, s.owned, overlap);
    s.oversampled = grow_layers(mesh, s.overlap, oversampling - overlap);
    const auto classes = classify_dofs(mesh, s.oversampled);
    s.dofs.reserve(classes.b1.size() + classes.b2.size() + classes.b3.size());
    for (const auto* v : {&classes.b1, &classes.b2, &classes.b3}) s.dofs.insert(s.dofs.end(), v->begin(), v->end());
    std::sort(s.dofs.begin(), s.dofs.end());
    s.b1 = positions_in(s.dofs, classes.b1);
    s.b2 = positions_in(s.dofs, classes.b2);
    s.b3 = positions_in(s.dofs, classes.b3);
    for (std::size_t i = 0; i < s.dofs.size(); i += static_cast<std::size_t>(dim))
      ++multiplicity[static_cast<std::size_t>(s.dofs[i] / dim)];
  }
  d.coloring_constant = *std::max_element(multiplicity.begin(), multiplicity.end());
  return d;
}

/// One row per subdomain: sizes of the element sets and DoF classes, plus k0.
inline void write_decomposition_csv(std::ostream& os, const Decomposition& d)
{
  os << "subdomain,owned_elements,overlap_elements,oversampled_elements,dofs,n1,n2,n3,neighbors,k0\n";
  for (int j = 0; j < d.size(); ++j) {
    const auto& s = d.subdomains[static_cast<std::size_t>(j)];
    os << j << ',' << s.owned.size() << ',' << s.overlap.size() << ',' << s.oversampled.size() << ',' << s.dofs.size()
       << ',' << s.b1.size() << ',' << s.b2.size() << ',' << s.b3.size() << ',' << d.neighbors(j).size() << ','
       << d.coloring_constant << '\n';
  }
}

inline void write_owner_csv(std::ostream& os, const Decomposition& d)
{
  os << "element,owner\n";
  for (std::size_t e = 0; e < d.owner.size(); ++e) os << e << ',' << d.owner[e] << '\n';
}

} // namespace msgfem
