#pragma once

#include "msgfem/pou.hpp"
#include "msgfem/spectral.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <ostream>
#include <span>
#include <vector>

namespace msgfem {

namespace detail {

inline Vector gather(const Vector& v, std::span<const Index> idx)
{
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = v(idx[i]);
  return out;
}

inline std::vector<Index> merged(std::span<const Index> a, std::span<const Index> b)
{
  std::vector<Index> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  return out;
}

inline Vector spd_solve(const SparseMatrix& a, const Vector& rhs, const char* what)
{
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw SolverError(std::string(what) + ": factorization failed");
  Vector x = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !x.allFinite()) throw SolverError(std::string(what) + ": solve failed");
  return x;
}

} // namespace detail

/// Local particular function psi = psi_r + psi_d on one subdomain, in the
/// numbering of `a_local`.
///
/// psi_r solves A11 psi_1 = b_1 with zero values on B2 and B3. psi_d is the
/// discrete harmonic lift of the Dirichlet data: unknowns on B1 and B2, h on B3.
/// `load` and `dirichlet` hold b and h at the local DoFs.
inline Vector local_particular_solution(const SparseMatrix& a_local, std::span<const Index> b1, std::span<const Index> b2,
                                        std::span<const Index> b3, const Vector& load, const Vector& dirichlet)
{
  Vector psi = Vector::Zero(a_local.rows());
  const Vector b_1 = detail::gather(load, b1);
  if (!b1.empty() && b_1.squaredNorm() > 0) {
    const Vector x = detail::spd_solve(select_submatrix(a_local, b1, b1), b_1, "particular solution");
    for (std::size_t i = 0; i < b1.size(); ++i) psi(b1[i]) = x(static_cast<Index>(i));
  }
  const Vector h3 = detail::gather(dirichlet, b3);
  if (!b3.empty() && h3.squaredNorm() > 0) {
    const auto free = detail::merged(b1, b2);
    const Vector rhs = -(select_submatrix(a_local, free, b3) * h3);
    const Vector x = detail::spd_solve(select_submatrix(a_local, free, free), rhs, "Dirichlet lift");
    for (std::size_t i = 0; i < free.size(); ++i) psi(free[i]) += x(static_cast<Index>(i));
    for (std::size_t i = 0; i < b3.size(); ++i) psi(b3[i]) = h3(static_cast<Index>(i));
  }
  return psi;
}

inline Vector local_particular_solution(const SparseMatrix& a_local, const Subdomain& s, const Vector& load,
                                        const Vector& dirichlet)
{
  return local_particular_solution(a_local, s.b1, s.b2, s.b3, detail::gather(load, s.dofs), detail::gather(dirichlet, s.dofs));
}

/// Global prolongation Phi (all DoFs x N_H). Per subdomain, the PoU-weighted
/// eigenvectors are orthonormalized, then the weighted particular function is
/// orthogonalized against them and appended.
struct CoarseSpace {
  SparseMatrix basis;
  std::vector<Index> offsets;          ///< columns of subdomain j: [offsets[j], offsets[j+1])
  std::vector<int> modes;              ///< eigenvector columns kept per subdomain
  std::vector<Index> particular_column; ///< l_j, or -1
  std::vector<double> particular_norm;  ///< ||psi_hat_j|| before normalization
  std::vector<char> particular_fixed;   ///< coefficient fixed to ||psi_hat_j|| (Dirichlet subdomains)
  Vector particular;                    ///< stitched u^p = sum_j R_j^T (mu_j psi_j)
  int dropped = 0;

  Index size() const { return basis.cols(); }
  int num_particular() const
  {
    return static_cast<int>(std::count_if(particular_column.begin(), particular_column.end(), [](Index c) { return c >= 0; }));
  }
};

inline constexpr double gram_schmidt_drop_tolerance = 1e-10;

namespace detail {

/// Projects v against the orthonormal columns of q twice (modified Gram-Schmidt
/// with one re-orthogonalization pass); returns false if v became negligible.
inline bool orthogonalize(const std::vector<Vector>& q, Vector& v)
{
  const double initial = v.norm();
  if (!(initial > 0)) return false;
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& c : q) v -= c.dot(v) * c;
  return v.norm() >= gram_schmidt_drop_tolerance * initial;
}

} // namespace detail

/// `particulars[j]` may be empty (no particular column) or a vector in the
/// Subdomain::dofs numbering.
inline CoarseSpace build_coarse_space(const Decomposition& d, const PartitionOfUnity& pou,
                                      const std::vector<LocalSpectralBasis>& bases, const std::vector<Vector>& particulars,
                                      Index num_dofs)
{
  const auto n = static_cast<std::size_t>(d.size());
  if (bases.size() != n) throw InvalidArgument("build_coarse_space: one spectral basis per subdomain is required");
  if (!particulars.empty() && particulars.size() != n)
    throw InvalidArgument("build_coarse_space: particular solutions must be given for every subdomain or none");

  CoarseSpace cs;
  cs.offsets.assign(n + 1, 0);
  cs.modes.assign(n, 0);
  cs.particular_column.assign(n, -1);
  cs.particular_norm.assign(n, 0.0);
  cs.particular_fixed.assign(n, 0);
  cs.particular = Vector::Zero(num_dofs);

  std::vector<Triplet> trip;
  Index col = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& s = d.subdomains[j];
    const Vector& mu = pou[static_cast<int>(j)];
    const auto& b = bases[j];
    if (b.vectors.rows() != s.size() || b.vectors.cols() < b.selected)
      throw InvalidArgument("build_coarse_space: spectral basis does not match the subdomain");
    std::vector<Vector> q;
    for (int k = 0; k < b.selected; ++k) {
      Vector v = mu.cwiseProduct(b.vectors.col(k));
      if (!detail::orthogonalize(q, v)) {
        ++cs.dropped;
        continue;
      }
      q.push_back(v / v.norm());
    }
    cs.modes[j] = static_cast<int>(q.size());

    if (!particulars.empty() && particulars[j].size() > 0) {
      const Vector weighted = mu.cwiseProduct(particulars[j]);
      for (Index i = 0; i < s.size(); ++i) cs.particular(s.dofs[static_cast<std::size_t>(i)]) += weighted(i);
      if (weighted.squaredNorm() > 0) {
        Vector v = weighted;
        if (detail::orthogonalize(q, v)) {
          cs.particular_norm[j] = v.norm();
          cs.particular_column[j] = col + static_cast<Index>(q.size());
          cs.particular_fixed[j] = s.touches_dirichlet() ? 1 : 0;
          q.push_back(v / v.norm());
        } else if (s.touches_dirichlet()) {
          throw SolverError("build_coarse_space: particular column on a Dirichlet subdomain is linearly dependent");
        } else {
          ++cs.dropped;
        }
      }
    }

    for (const auto& v : q) {
      for (Index i = 0; i < v.size(); ++i)
        if (v(i) != 0.0) trip.emplace_back(s.dofs[static_cast<std::size_t>(i)], col, v(i));
      ++col;
    }
    cs.offsets[j + 1] = col;
  }
  cs.basis.resize(num_dofs, col);
  cs.basis.setFromTriplets(trip.begin(), trip.end());
  cs.basis.makeCompressed();
  return cs;
}

struct CoarseSolution {
  Vector coefficients;
  Vector u; ///< fine-space u^G over all DoFs
};

/// Galerkin solve in the coarse space. `a` is the operator over all DoFs
/// without boundary conditions and `b` the full load; test functions are the
/// columns with free coefficients, which vanish on the Dirichlet boundary.
/// Fixed particular coefficients are moved to the right-hand side, which is
/// the row replacement A^H_ll = 1, b^H_l = ||psi_hat|| eliminated symmetrically.
inline CoarseSolution solve_coarse(const SparseMatrix& a, const Vector& b, const CoarseSpace& cs)
{
  const Index nh = cs.size();
  if (nh == 0) throw SolverError("solve_coarse: empty coarse space");
  const SparseMatrix aphi = a * cs.basis;
  const DenseMatrix ah = DenseMatrix(SparseMatrix(cs.basis.transpose() * aphi));
  const Vector bh = cs.basis.transpose() * b;

  Vector c = Vector::Zero(nh);
  std::vector<char> fixed(static_cast<std::size_t>(nh), 0);
  for (std::size_t j = 0; j < cs.particular_column.size(); ++j)
    if (cs.particular_column[j] >= 0 && cs.particular_fixed[j]) {
      fixed[static_cast<std::size_t>(cs.particular_column[j])] = 1;
      c(cs.particular_column[j]) = cs.particular_norm[j];
    }
  std::vector<Index> free;
  for (Index i = 0; i < nh; ++i)
    if (!fixed[static_cast<std::size_t>(i)]) free.push_back(i);
  const auto nf = static_cast<Index>(free.size());
  if (nf > 0) {
    DenseMatrix aff(nf, nf);
    Vector rhs(nf);
    const Vector lifted = bh - ah * c;
    for (Index r = 0; r < nf; ++r) {
      rhs(r) = lifted(free[static_cast<std::size_t>(r)]);
      for (Index q = 0; q < nf; ++q) aff(r, q) = ah(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(q)]);
    }
    aff = 0.5 * (aff + aff.transpose()).eval();
    Eigen::LLT<DenseMatrix> llt(aff);
    if (llt.info() != Eigen::Success) throw SolverError("solve_coarse: coarse matrix is singular or indefinite");
    const Vector x = llt.solve(rhs);
    if (!x.allFinite()) throw SolverError("solve_coarse: coarse solve produced non-finite values");
    for (Index r = 0; r < nf; ++r) c(free[static_cast<std::size_t>(r)]) = x(r);
  }
  return {c, cs.basis * c};
}

} // namespace msgfem
