#pragma once

#include "msgfem/types.hpp"

#include <cmath>
#include <numbers>

namespace msgfem {

/// Orthotropic ply described by its nine engineering constants (MPa for
/// moduli) and the in-plane fibre angle in degrees.
///
/// Voigt ordering used throughout the library is (11, 22, 33, 23, 13, 12)
/// with engineering shear strains.
struct OrthotropicMaterial {
  double E1 = 1.0;
  double E2 = 1.0;
  double E3 = 1.0;
  double G12 = 0.5;
  double G13 = 0.5;
  double G23 = 0.5;
  double nu12 = 0.0;
  double nu13 = 0.0;
  double nu23 = 0.0;
  double angle_deg = 0.0;
};

inline OrthotropicMaterial isotropic_material(double youngs, double poisson)
{
  const double shear = youngs / (2.0 * (1.0 + poisson));
  return {youngs, youngs, youngs, shear, shear, shear, poisson, poisson, poisson, 0.0};
}

/// Stiffness in the ply frame, obtained by inverting the compliance matrix.
inline Matrix6 ply_stiffness(const OrthotropicMaterial& m)
{
  if (m.E1 <= 0 || m.E2 <= 0 || m.E3 <= 0 || m.G12 <= 0 || m.G13 <= 0 || m.G23 <= 0)
    throw InvalidArgument("orthotropic material: moduli must be positive");

  Matrix6 compliance = Matrix6::Zero();
  compliance(0, 0) = 1.0 / m.E1;
  compliance(1, 1) = 1.0 / m.E2;
  compliance(2, 2) = 1.0 / m.E3;
  compliance(0, 1) = compliance(1, 0) = -m.nu12 / m.E1;
  compliance(0, 2) = compliance(2, 0) = -m.nu13 / m.E1;
  compliance(1, 2) = compliance(2, 1) = -m.nu23 / m.E2;
  compliance(3, 3) = 1.0 / m.G23;
  compliance(4, 4) = 1.0 / m.G13;
  compliance(5, 5) = 1.0 / m.G12;

  Eigen::LLT<Matrix6> llt(compliance);
  if (llt.info() != Eigen::Success)
    throw InvalidArgument("orthotropic material: engineering constants give an indefinite compliance");
  Matrix6 stiffness = llt.solve(Matrix6::Identity());
  return 0.5 * (stiffness + stiffness.transpose());
}

/// Rotation by `angle_deg` about coordinate axis `axis` (0, 1 or 2).
inline Matrix3 axis_rotation(double angle_deg, int axis)
{
  const double t = angle_deg * std::numbers::pi / 180.0;
  return Eigen::AngleAxisd(t, Eigen::Vector3d::Unit(axis)).toRotationMatrix();
}

namespace detail {
inline constexpr int voigt_pairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
} // namespace detail

/// Bond matrix T with sigma' = T sigma for sigma' = R sigma R^T, both in Voigt form.
/// With engineering shear strains the stiffness transforms as C' = T C T^T.
inline Matrix6 voigt_rotation(const Matrix3& r)
{
  Matrix6 t;
  for (int a = 0; a < 6; ++a) {
    const int i = detail::voigt_pairs[a][0];
    const int j = detail::voigt_pairs[a][1];
    for (int b = 0; b < 6; ++b) {
      const int k = detail::voigt_pairs[b][0];
      const int l = detail::voigt_pairs[b][1];
      t(a, b) = r(i, k) * r(j, l) + (k != l ? r(i, l) * r(j, k) : 0.0);
    }
  }
  return t;
}

inline Matrix6 rotate_stiffness(const Matrix6& c, const Matrix3& r)
{
  const Matrix6 t = voigt_rotation(r);
  Matrix6 out = t * c * t.transpose();
  return 0.5 * (out + out.transpose());
}

/// Ply stiffness rotated by the ply angle about the stacking (through-thickness) axis.
inline Matrix6 rotated_stiffness(const OrthotropicMaterial& m, int stacking_axis = 2)
{
  if (!(m.angle_deg > -180.0 && m.angle_deg <= 180.0))
    throw InvalidArgument("ply angle must lie in (-180, 180] degrees");
  const Matrix6 c = rotate_stiffness(ply_stiffness(m), axis_rotation(m.angle_deg, stacking_axis));
  if (Eigen::LLT<Matrix6>(c).info() != Eigen::Success)
    throw InvalidArgument("rotated stiffness is not positive definite");
  return c;
}

/// Plane-strain reduction of a 3D Voigt stiffness to the (11, 22, 12) components.
inline Eigen::Matrix3d plane_strain_stiffness(const Matrix6& c)
{
  constexpr int keep[3] = {0, 1, 5};
  Eigen::Matrix3d out;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      out(a, b) = c(keep[a], keep[b]);
  return out;
}

} // namespace msgfem
