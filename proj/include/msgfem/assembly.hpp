#pragma once

#include "msgfem/material.hpp"
#include "msgfem/mesh.hpp"

#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

namespace msgfem {

namespace detail {

inline constexpr double gauss_abscissa = 0.57735026918962576451; // 1/sqrt(3)

/// Trilinear (bilinear in 2D) shape-function derivatives in reference coordinates,
/// one column per local node.
inline DenseMatrix reference_gradients(int dim, const std::array<double, 3>& xi)
{
  const int npe = 1 << dim;
  static constexpr int offs[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                     {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  const double scale = 1.0 / npe;
  DenseMatrix g(dim, npe);
  for (int a = 0; a < npe; ++a) {
    for (int k = 0; k < dim; ++k) {
      double v = scale * (2 * offs[a][k] - 1);
      for (int i = 0; i < dim; ++i)
        if (i != k) v *= 1.0 + (2 * offs[a][i] - 1) * xi[i];
      g(k, a) = v;
    }
  }
  return g;
}

inline Vector shape_values(int dim, const std::array<double, 3>& xi)
{
  const int npe = 1 << dim;
  static constexpr int offs[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                     {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  Vector n(npe);
  for (int a = 0; a < npe; ++a) {
    double v = 1.0 / npe;
    for (int i = 0; i < dim; ++i) v *= 1.0 + (2 * offs[a][i] - 1) * xi[i];
    n(a) = v;
  }
  return n;
}

inline DenseMatrix corner_matrix(int dim, std::span<const Point> corners)
{
  DenseMatrix x(static_cast<Index>(corners.size()), dim);
  for (std::size_t a = 0; a < corners.size(); ++a)
    for (int d = 0; d < dim; ++d) x(static_cast<Index>(a), d) = corners[a](d);
  return x;
}

/// Gauss points of the 2^dim tensor rule (all weights equal to one).
inline std::vector<std::array<double, 3>> gauss_points(int dim)
{
  std::vector<std::array<double, 3>> pts;
  const double g = gauss_abscissa;
  for (int k = 0; k < (dim == 3 ? 2 : 1); ++k)
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i)
        pts.push_back({i ? g : -g, j ? g : -g, dim == 3 ? (k ? g : -g) : 0.0});
  return pts;
}

/// Physical gradients (dim x npe) and Jacobian determinant at a reference point.
inline std::pair<DenseMatrix, double> physical_gradients(int dim, std::span<const Point> corners,
                                                         const std::array<double, 3>& xi)
{
  const DenseMatrix dref = reference_gradients(dim, xi);
  const DenseMatrix jac = dref * corner_matrix(dim, corners); // J(k, l) = d x_l / d xi_k
  const double det = jac.determinant();
  if (!(det > 0)) throw InvalidArgument("degenerate element: non-positive Jacobian determinant");
  return {jac.inverse() * dref, det};
}

} // namespace detail

/// Strain-displacement matrix in Voigt form (engineering shear) for the given
/// physical shape-function gradients. 6 x 24 in 3D, 3 x 8 in 2D (xx, yy, xy).
inline DenseMatrix strain_displacement(int dim, const DenseMatrix& grad)
{
  const Index npe = grad.cols();
  if (dim == 3) {
    DenseMatrix b = DenseMatrix::Zero(6, 3 * npe);
    for (Index a = 0; a < npe; ++a) {
      const double dx = grad(0, a), dy = grad(1, a), dz = grad(2, a);
      b(0, 3 * a) = dx;
      b(1, 3 * a + 1) = dy;
      b(2, 3 * a + 2) = dz;
      b(3, 3 * a + 1) = dz;
      b(3, 3 * a + 2) = dy;
      b(4, 3 * a) = dz;
      b(4, 3 * a + 2) = dx;
      b(5, 3 * a) = dy;
      b(5, 3 * a + 1) = dx;
    }
    return b;
  }
  DenseMatrix b = DenseMatrix::Zero(3, 2 * npe);
  for (Index a = 0; a < npe; ++a) {
    const double dx = grad(0, a), dy = grad(1, a);
    b(0, 2 * a) = dx;
    b(1, 2 * a + 1) = dy;
    b(2, 2 * a) = dy;
    b(2, 2 * a + 1) = dx;
  }
  return b;
}

/// Material matrix acting on the element's Voigt strain vector.
inline DenseMatrix constitutive_matrix(int dim, const Matrix6& c)
{
  if (dim == 3) return c;
  return plane_strain_stiffness(c);
}

/// Element stiffness by full 2^dim Gauss integration.
inline DenseMatrix element_stiffness(int dim, std::span<const Point> corners, const Matrix6& stiffness)
{
  const int npe = 1 << dim;
  if (static_cast<int>(corners.size()) != npe) throw InvalidArgument("element_stiffness: wrong corner count");
  const DenseMatrix d = constitutive_matrix(dim, stiffness);
  DenseMatrix k = DenseMatrix::Zero(npe * dim, npe * dim);
  for (const auto& xi : detail::gauss_points(dim)) {
    const auto [grad, det] = detail::physical_gradients(dim, corners, xi);
    const DenseMatrix b = strain_displacement(dim, grad);
    k.noalias() += det * b.transpose() * d * b;
  }
  return 0.5 * (k + k.transpose());
}

/// Prescribed data: Dirichlet displacement h and Neumann traction g are
/// evaluated per box face (see face_id), f is the body force.
struct BoundaryData {
  std::function<Point(const Point&, int face)> dirichlet;
  std::function<Point(const Point&, int face)> traction;
  std::function<Point(const Point&)> body_force;
};

/// Constant data per face: the vector is read as a displacement on Dirichlet
/// faces and as a traction on Neumann faces.
inline BoundaryData constant_boundary_data(const std::array<Point, 6>& face_values, const Point& body_force)
{
  BoundaryData d;
  d.dirichlet = [face_values](const Point&, int face) { return face_values[static_cast<std::size_t>(face)]; };
  d.traction = [face_values](const Point&, int face) { return face_values[static_cast<std::size_t>(face)]; };
  d.body_force = [body_force](const Point&) { return body_force; };
  return d;
}

/// Node-blocked DoF numbering (dof = node * dim + component) with the
/// free/Dirichlet split taken from the mesh boundary tags.
struct DofMap {
  Index num_dofs = 0;
  std::vector<std::uint8_t> is_dirichlet;
  Vector dirichlet_values; // full length, zero on free DoFs
  std::vector<Index> free_dofs;
  std::vector<Index> free_index; // global DoF -> position in free_dofs, -1 if Dirichlet

  Index num_free() const { return static_cast<Index>(free_dofs.size()); }
  bool dirichlet(Index dof) const { return is_dirichlet[static_cast<std::size_t>(dof)] != 0; }
};

/// Subdomain operator: a sorted list of global DoFs and the matrix in that numbering.
struct LocalOperator {
  std::vector<Index> dofs;
  SparseMatrix matrix;
};

/// Element-level assembly context. Element matrices are computed once and
/// reused for every restriction a_D of the bilinear form.
class Assembler {
public:
  Assembler(std::shared_ptr<const Mesh> mesh, std::vector<OrthotropicMaterial> materials)
      : mesh_(std::move(mesh)), materials_(std::move(materials))
  {
    const Mesh& m = *mesh_;
    for (int id : m.materials())
      if (id < 0 || id >= static_cast<int>(materials_.size()))
        throw InvalidArgument("element references an undefined material");
    stiffness_.reserve(materials_.size());
    for (const auto& mat : materials_) stiffness_.push_back(rotated_stiffness(mat, m.stacking_axis()));
    element_matrices_.reserve(static_cast<std::size_t>(m.num_elements()));
    for (Index e = 0; e < m.num_elements(); ++e) {
      const auto corners = m.element_corners(e);
      element_matrices_.push_back(element_stiffness(m.dimension(), corners, stiffness_[m.material(e)]));
    }
  }

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  const std::vector<OrthotropicMaterial>& materials() const { return materials_; }
  const Matrix6& stiffness(int material) const { return stiffness_[static_cast<std::size_t>(material)]; }
  const DenseMatrix& element_matrix(Index e) const { return element_matrices_[static_cast<std::size_t>(e)]; }

  std::vector<Index> element_dofs(Index e) const
  {
    const int dim = mesh_->dimension();
    std::vector<Index> dofs;
    dofs.reserve(static_cast<std::size_t>(mesh_->nodes_per_element() * dim));
    for (Index n : mesh_->element_nodes(e))
      for (int c = 0; c < dim; ++c) dofs.push_back(n * dim + c);
    return dofs;
  }

  /// Global matrix without boundary conditions.
  SparseMatrix assemble_neumann() const
  {
    std::vector<Index> all(static_cast<std::size_t>(mesh_->num_elements()));
    for (Index e = 0; e < mesh_->num_elements(); ++e) all[static_cast<std::size_t>(e)] = e;
    auto op = restrict_to(all);
    return std::move(op.matrix);
  }

  /// Sum of element matrices over `elements`, in the sorted local numbering of
  /// the DoFs those elements touch.
  LocalOperator restrict_to(std::span<const Index> elements) const
  {
    if (elements.empty()) throw InvalidArgument("restrict_matrix: empty element set");
    const int dim = mesh_->dimension();
    std::vector<Index> nodes;
    for (Index e : elements)
      for (Index n : mesh_->element_nodes(e)) nodes.push_back(n);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    LocalOperator op;
    op.dofs.reserve(nodes.size() * static_cast<std::size_t>(dim));
    std::vector<Index> local(static_cast<std::size_t>(mesh_->num_nodes()), -1);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      local[static_cast<std::size_t>(nodes[i])] = static_cast<Index>(i);
      for (int c = 0; c < dim; ++c) op.dofs.push_back(nodes[i] * dim + c);
    }

    std::vector<Triplet> trip;
    const int edofs = mesh_->nodes_per_element() * dim;
    trip.reserve(elements.size() * static_cast<std::size_t>(edofs * edofs));
    std::vector<Index> ld(static_cast<std::size_t>(edofs));
    for (Index e : elements) {
      const auto en = mesh_->element_nodes(e);
      for (std::size_t a = 0; a < en.size(); ++a)
        for (int c = 0; c < dim; ++c) ld[a * dim + c] = local[static_cast<std::size_t>(en[a])] * dim + c;
      const auto& ke = element_matrix(e);
      for (int i = 0; i < edofs; ++i)
        for (int j = 0; j < edofs; ++j) trip.emplace_back(ld[i], ld[j], ke(i, j));
    }
    const auto n = static_cast<Index>(op.dofs.size());
    op.matrix.resize(n, n);
    op.matrix.setFromTriplets(trip.begin(), trip.end());
    op.matrix.makeCompressed();
    return op;
  }

  /// Load vector b(v) = int_Gamma_N g.v ds + int_Omega f.v dx over all DoFs.
  Vector assemble_load(const BoundaryData& data) const
  {
    const Mesh& m = *mesh_;
    const int dim = m.dimension();
    Vector b = Vector::Zero(m.num_dofs());
    if (data.body_force) {
      for (Index e = 0; e < m.num_elements(); ++e) {
        const auto corners = m.element_corners(e);
        const auto en = m.element_nodes(e);
        for (const auto& xi : detail::gauss_points(dim)) {
          const auto [grad, det] = detail::physical_gradients(dim, corners, xi);
          const Vector n = detail::shape_values(dim, xi);
          Point x = Point::Zero();
          for (Index a = 0; a < n.size(); ++a) x += n(a) * corners[static_cast<std::size_t>(a)];
          const Point f = data.body_force(x);
          for (Index a = 0; a < n.size(); ++a)
            for (int c = 0; c < dim; ++c) b(en[static_cast<std::size_t>(a)] * dim + c) += det * n(a) * f(c);
        }
      }
    }
    if (data.traction) {
      for (const auto& facet : m.boundary_facets()) {
        if (facet.kind != BoundaryKind::neumann) continue;
        add_facet_traction(facet, data, b);
      }
    }
    return b;
  }

private:
  void add_facet_traction(const BoundaryFacet& facet, const BoundaryData& data, Vector& b) const
  {
    const Mesh& m = *mesh_;
    const int dim = m.dimension();
    const auto corners = m.element_corners(facet.element);
    const auto en = m.element_nodes(facet.element);
    const double g = detail::gauss_abscissa;
    const int face = face_id(facet.axis, facet.side);
    std::vector<int> tangential;
    for (int a = 0; a < dim; ++a)
      if (a != facet.axis) tangential.push_back(a);
    const int npts = dim == 3 ? 4 : 2;
    for (int q = 0; q < npts; ++q) {
      std::array<double, 3> xi{0, 0, 0};
      xi[facet.axis] = facet.side ? 1.0 : -1.0;
      xi[tangential[0]] = (q & 1) ? g : -g;
      if (dim == 3) xi[tangential[1]] = (q & 2) ? g : -g;
      const DenseMatrix x = detail::corner_matrix(dim, corners);
      const DenseMatrix dref = detail::reference_gradients(dim, xi);
      const DenseMatrix jac = dref * x; // rows: d x / d xi_k
      double da = 0;
      if (dim == 3) {
        const Eigen::Vector3d t1 = jac.row(tangential[0]).transpose();
        const Eigen::Vector3d t2 = jac.row(tangential[1]).transpose();
        da = t1.cross(t2).norm();
      } else {
        da = jac.row(tangential[0]).norm();
      }
      const Vector n = detail::shape_values(dim, xi);
      Point p = Point::Zero();
      for (Index a = 0; a < n.size(); ++a) p += n(a) * corners[static_cast<std::size_t>(a)];
      const Point t = data.traction(p, face);
      for (Index a = 0; a < n.size(); ++a)
        for (int c = 0; c < dim; ++c) b(en[static_cast<std::size_t>(a)] * dim + c) += da * n(a) * t(c);
    }
  }

  std::shared_ptr<const Mesh> mesh_;
  std::vector<OrthotropicMaterial> materials_;
  std::vector<Matrix6> stiffness_;
  std::vector<DenseMatrix> element_matrices_;
};

/// Restriction a_D of the bilinear form to the element set D.
inline LocalOperator restrict_matrix(const Assembler& assembler, std::span<const Index> elements)
{
  return assembler.restrict_to(elements);
}

/// Dirichlet DoFs from the mesh tags; h is evaluated on the first Dirichlet
/// face (in face_id order) containing the node.
inline DofMap build_dof_map(const Mesh& mesh, const BoundaryData& data)
{
  const int dim = mesh.dimension();
  DofMap map;
  map.num_dofs = mesh.num_dofs();
  map.is_dirichlet.assign(static_cast<std::size_t>(map.num_dofs), 0);
  map.dirichlet_values = Vector::Zero(map.num_dofs);
  for (int axis = 0; axis < dim; ++axis) {
    for (int side = 0; side < 2; ++side) {
      if (mesh.face_kind(axis, side) != BoundaryKind::dirichlet) continue;
      const int face = face_id(axis, side);
      for (const auto& f : mesh.boundary_facets()) {
        if (f.axis != axis || f.side != side) continue;
        for (Index n : mesh.face_nodes(f.element, axis, side)) {
          if (map.is_dirichlet[static_cast<std::size_t>(n * dim)]) continue;
          const Point h = data.dirichlet ? data.dirichlet(mesh.node(n), face) : Point::Zero();
          for (int c = 0; c < dim; ++c) {
            map.is_dirichlet[static_cast<std::size_t>(n * dim + c)] = 1;
            map.dirichlet_values(n * dim + c) = h(c);
          }
        }
      }
    }
  }
  map.free_index.assign(static_cast<std::size_t>(map.num_dofs), -1);
  for (Index d = 0; d < map.num_dofs; ++d) {
    if (map.dirichlet(d)) continue;
    map.free_index[static_cast<std::size_t>(d)] = static_cast<Index>(map.free_dofs.size());
    map.free_dofs.push_back(d);
  }
  return map;
}

/// Fine-scale system with Dirichlet rows and columns eliminated symmetrically.
struct LinearSystem {
  SparseMatrix neumann; ///< A over all DoFs, no boundary conditions
  Vector load;          ///< b over all DoFs
  DofMap dofs;
  SparseMatrix reduced;  ///< A restricted to free DoFs
  Vector reduced_rhs;    ///< b~ = b - a(u^p, .) on free DoFs

  Vector expand(const Vector& free) const
  {
    Vector full = dofs.dirichlet_values;
    for (Index i = 0; i < dofs.num_free(); ++i) full(dofs.free_dofs[static_cast<std::size_t>(i)]) = free(i);
    return full;
  }

  Vector restrict_free(const Vector& full) const
  {
    Vector out(dofs.num_free());
    for (Index i = 0; i < dofs.num_free(); ++i) out(i) = full(dofs.free_dofs[static_cast<std::size_t>(i)]);
    return out;
  }
};

/// Principal submatrix on the given sorted index list.
inline SparseMatrix select_submatrix(const SparseMatrix& a, std::span<const Index> rows, std::span<const Index> cols)
{
  std::vector<Index> col_pos(static_cast<std::size_t>(a.cols()), -1);
  for (std::size_t j = 0; j < cols.size(); ++j) col_pos[static_cast<std::size_t>(cols[j])] = static_cast<Index>(j);
  std::vector<Index> row_pos(static_cast<std::size_t>(a.rows()), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) row_pos[static_cast<std::size_t>(rows[i])] = static_cast<Index>(i);
  std::vector<Triplet> trip;
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (SparseMatrix::InnerIterator it(a, cols[j]); it; ++it) {
      const Index r = row_pos[static_cast<std::size_t>(it.row())];
      if (r >= 0) trip.emplace_back(r, static_cast<Index>(j), it.value());
    }
  SparseMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

inline LinearSystem assemble_global(const Assembler& assembler, const BoundaryData& data)
{
  LinearSystem sys;
  sys.dofs = build_dof_map(assembler.mesh(), data);
  if (sys.dofs.num_free() == sys.dofs.num_dofs)
    throw InvalidArgument("assemble_global: no Dirichlet DoFs, the elasticity system is singular");
  sys.neumann = assembler.assemble_neumann();
  sys.load = assembler.assemble_load(data);
  sys.reduced = select_submatrix(sys.neumann, sys.dofs.free_dofs, sys.dofs.free_dofs);
  const Vector lifted = sys.load - sys.neumann * sys.dofs.dirichlet_values;
  sys.reduced_rhs = sys.restrict_free(lifted);
  return sys;
}

/// Matrix Market coordinate output (general, real).
inline void write_matrix_market(std::ostream& os, const SparseMatrix& a)
{
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  os.precision(17);
  for (Index j = 0; j < a.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(a, j); it; ++it) os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

} // namespace msgfem
