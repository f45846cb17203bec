#pragma once

#include "msgfem/assembly.hpp"
#include "msgfem/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

namespace msgfem {

using Voigt = Eigen::Matrix<double, 6, 1>;

/// Element-centroid strain and stress, Voigt (11, 22, 33, 23, 13, 12) with
/// engineering shear strain, in the global frame and in the ply frame.
struct FieldSample {
  std::vector<Voigt> strain, stress;
  std::vector<Voigt> strain_local, stress_local;
};

namespace detail {

inline Voigt element_strain(const Mesh& mesh, Index e, const Vector& u)
{
  const int dim = mesh.dimension();
  const auto corners = mesh.element_corners(e);
  const auto [grad, det] = physical_gradients(dim, corners, {0.0, 0.0, 0.0});
  (void)det;
  const DenseMatrix b = strain_displacement(dim, grad);
  const auto en = mesh.element_nodes(e);
  Vector ue(b.cols());
  for (std::size_t a = 0; a < en.size(); ++a)
    for (int c = 0; c < dim; ++c) ue(static_cast<Index>(a) * dim + c) = u(en[a] * dim + c);
  const Vector eps = b * ue;
  Voigt out = Voigt::Zero();
  if (dim == 3) {
    out = eps;
  } else {
    out(0) = eps(0);
    out(1) = eps(1);
    out(5) = eps(2);
  }
  return out;
}

} // namespace detail

inline FieldSample compute_strain_stress(const Assembler& assembler, const Vector& u)
{
  const Mesh& mesh = assembler.mesh();
  if (u.size() != mesh.num_dofs()) throw InvalidArgument("compute_strain_stress: displacement size mismatch");
  const auto ne = static_cast<std::size_t>(mesh.num_elements());
  FieldSample f;
  f.strain.resize(ne);
  f.stress.resize(ne);
  f.strain_local.resize(ne);
  f.stress_local.resize(ne);

  std::vector<Matrix6> to_local(assembler.materials().size()), local_stiffness(assembler.materials().size());
  for (std::size_t m = 0; m < to_local.size(); ++m) {
    const auto& mat = assembler.materials()[m];
    to_local[m] = voigt_rotation(axis_rotation(mat.angle_deg, mesh.stacking_axis())).transpose();
    local_stiffness[m] = ply_stiffness(mat);
  }
  for (std::size_t e = 0; e < ne; ++e) {
    const int m = mesh.material(static_cast<Index>(e));
    const Voigt eps = detail::element_strain(mesh, static_cast<Index>(e), u);
    f.strain[e] = eps;
    f.stress[e] = assembler.stiffness(m) * eps;
    f.strain_local[e] = to_local[static_cast<std::size_t>(m)] * eps;
    f.stress_local[e] = local_stiffness[static_cast<std::size_t>(m)] * f.strain_local[e];
  }
  return f;
}

struct RelativeErrors {
  double displacement = 0; ///< e_d
  double strain = 0;       ///< e_eps
  double energy = 0;       ///< ||u_h - u_H||_a / ||u_h||_a
};

/// Discrete relative L2 errors of displacement and stacked strain components,
/// plus the relative energy-norm error under `a` (operator over all DoFs).
inline RelativeErrors relative_errors(const SparseMatrix& a, const Vector& u_h, const Vector& u_H, const FieldSample& f_h,
                                      const FieldSample& f_H)
{
  if (u_h.size() != u_H.size() || f_h.strain.size() != f_H.strain.size())
    throw InvalidArgument("relative_errors: field size mismatch");
  const double un = u_h.norm();
  if (!(un > 0)) throw InvalidArgument("relative_errors: reference displacement is zero");
  double num = 0, den = 0;
  for (std::size_t e = 0; e < f_h.strain.size(); ++e) {
    num += (f_h.strain[e] - f_H.strain[e]).squaredNorm();
    den += f_h.strain[e].squaredNorm();
  }
  if (!(den > 0)) throw InvalidArgument("relative_errors: reference strain is zero");
  const Vector diff = u_h - u_H;
  const double eh = u_h.dot(a * u_h);
  RelativeErrors r;
  r.displacement = diff.norm() / un;
  r.strain = std::sqrt(num / den);
  r.energy = std::sqrt(std::max(0.0, diff.dot(a * diff)) / eh);
  return r;
}

/// Longitudinal compressive failure index <|s12| + eta s22> / S_L evaluated
/// with ply-frame stresses.
inline std::vector<double> failure_criterion(const std::vector<Voigt>& stress_local, double shear_strength, double eta)
{
  if (!(shear_strength > 0)) throw InvalidArgument("failure_criterion: shear strength must be positive");
  std::vector<double> out(stress_local.size());
  for (std::size_t e = 0; e < stress_local.size(); ++e)
    out[e] = std::max(0.0, std::abs(stress_local[e](5)) + eta * stress_local[e](1)) / shear_strength;
  return out;
}

/// Per-element |eps_xx(u_h) - eps_xx(u_G)|.
inline std::vector<double> error_localization(const FieldSample& f_h, const FieldSample& f_G)
{
  std::vector<double> out(f_h.strain.size());
  for (std::size_t e = 0; e < out.size(); ++e) out[e] = std::abs(f_h.strain[e](0) - f_G.strain[e](0));
  return out;
}

/// Elements sharing a node with an element owned by another subdomain: the
/// element layer on either side of the non-overlapping interfaces.
inline std::vector<char> interface_elements(const Mesh& mesh, const std::vector<int>& owner)
{
  std::vector<char> out(static_cast<std::size_t>(mesh.num_elements()), 0);
  for (Index e = 0; e < mesh.num_elements(); ++e)
    for (Index f : node_neighbors(mesh, e))
      if (owner[static_cast<std::size_t>(f)] != owner[static_cast<std::size_t>(e)]) {
        out[static_cast<std::size_t>(e)] = 1;
        break;
      }
  return out;
}

/// Columns: quantity, value.
inline void write_errors_csv(std::ostream& os, const RelativeErrors& r)
{
  os.precision(12);
  os << "quantity,value\n";
  os << "e_d," << r.displacement << '\n';
  os << "e_eps," << r.strain << '\n';
  os << "energy," << r.energy << '\n';
}

} // namespace msgfem
