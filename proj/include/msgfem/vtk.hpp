#pragma once

#include "msgfem/mesh.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace msgfem {

struct CellScalar {
  std::string name;
  std::vector<double> values;
};

struct PointVector {
  std::string name;
  Vector values; ///< node-blocked, dim components per node
};

/// Legacy ASCII VTK 3.0 unstructured grid with hexahedra (3D) or quads (2D).
inline void write_vtk(std::ostream& os, const Mesh& mesh, const std::vector<PointVector>& point_data,
                      const std::vector<CellScalar>& cell_data, const std::string& title = "msgfem")
{
  const int dim = mesh.dimension();
  const Index nn = mesh.num_nodes(), ne = mesh.num_elements();
  const int npe = mesh.nodes_per_element();
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os.precision(12);
  os << "POINTS " << nn << " double\n";
  for (const auto& p : mesh.nodes()) os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  os << "CELLS " << ne << ' ' << ne * (npe + 1) << '\n';
  for (Index e = 0; e < ne; ++e) {
    os << npe;
    for (Index n : mesh.element_nodes(e)) os << ' ' << n;
    os << '\n';
  }
  os << "CELL_TYPES " << ne << '\n';
  for (Index e = 0; e < ne; ++e) os << (dim == 3 ? 12 : 9) << '\n';

  if (!point_data.empty()) {
    os << "POINT_DATA " << nn << '\n';
    for (const auto& f : point_data) {
      if (f.values.size() != nn * dim) throw InvalidArgument("write_vtk: point field '" + f.name + "' has the wrong size");
      os << "VECTORS " << f.name << " double\n";
      for (Index n = 0; n < nn; ++n)
        os << f.values(n * dim) << ' ' << f.values(n * dim + 1) << ' ' << (dim == 3 ? f.values(n * dim + 2) : 0.0) << '\n';
    }
  }
  if (!cell_data.empty()) {
    os << "CELL_DATA " << ne << '\n';
    for (const auto& f : cell_data) {
      if (static_cast<Index>(f.values.size()) != ne)
        throw InvalidArgument("write_vtk: cell field '" + f.name + "' has the wrong size");
      os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f.values) os << v << '\n';
    }
  }
}

} // namespace msgfem
