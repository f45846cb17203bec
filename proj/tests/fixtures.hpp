#pragma once

#include "msgfem/pipeline.hpp"

#include <memory>

namespace fixture {

using namespace msgfem;

inline OrthotropicMaterial carbon_like(double angle = 0.0)
{
  OrthotropicMaterial m{100000, 10000, 10000, 5000, 5000, 3500, 0.3, 0.3, 0.45, angle};
  return m;
}

/// Small [0/45/-45] beam clamped at x = 0 with a transverse displacement at x = L.
inline ProblemSpec small_beam(std::array<Index, 3> counts = {12, 2, 3}, int dim = 3)
{
  ProblemSpec s;
  s.dimension = dim;
  s.extents = dim == 3 ? std::array<double, 3>{240.0, 40.0, 6.0} : std::array<double, 3>{240.0, 6.0, 0.0};
  s.counts = counts;
  s.materials = {carbon_like(0), carbon_like(45), carbon_like(-45)};
  s.rule.faces[face_id(0, 0)] = BoundaryKind::dirichlet;
  s.rule.faces[face_id(0, 1)] = BoundaryKind::dirichlet;
  s.face_values[face_id(0, 1)] = dim == 3 ? Point(0, 0, -1) : Point(0, -1, 0);
  return s;
}

inline std::shared_ptr<const Mesh> box(int dim, std::array<Index, 3> counts, BoundaryRule rule = {}, int plies = 1)
{
  std::vector<Ply> p;
  for (int i = 0; i < plies; ++i) p.push_back({1.0 / plies, i});
  if (plies > 1) {
    double rest = 1.0;
    for (int i = 0; i + 1 < plies; ++i) rest -= p[static_cast<std::size_t>(i)].thickness_fraction;
    p.back().thickness_fraction = rest;
  }
  const std::array<double, 3> ext{static_cast<double>(counts[0]), static_cast<double>(counts[1]),
                                  static_cast<double>(counts[2])};
  return std::make_shared<const Mesh>(build_structured_mesh(dim, ext, counts, p, rule));
}

} // namespace fixture
