#pragma once

#include "msgfem/coarse.hpp"
#include "msgfem/parallel.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <tuple>
#include <ostream>
#include <vector>

namespace msgfem {

/// Sparse Cholesky (LDL^T) solve of the Dirichlet-eliminated system.
inline Vector direct_solve(const SparseMatrix& a, const Vector& b)
{
  if (a.rows() != a.cols() || a.rows() != b.size()) throw InvalidArgument("direct_solve: dimension mismatch");
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw SolverError("direct_solve: factorization failed");
  if ((ldlt.vectorD().array() <= 0).any()) throw SolverError("direct_solve: matrix is not positive definite");
  Vector x = ldlt.solve(b);
  if (ldlt.info() != Eigen::Success || !x.allFinite()) throw SolverError("direct_solve: solve failed");
  return x;
}

struct PcgOptions {
  double tolerance = 1e-9; ///< relative residual ||r|| / ||b||
  int max_iterations = 500;
};

struct PcgResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residuals; ///< relative residual per iteration, starting at iteration 0
  double lambda_min = 0, lambda_max = 0;
  double condition_estimate = 1;
};

using Preconditioner = std::function<Vector(const Vector&)>;

namespace detail {

/// Extremal eigenvalues of the CG Lanczos tridiagonal built from the step lengths.
inline std::pair<double, double> lanczos_extremes(const std::vector<double>& alpha, const std::vector<double>& beta)
{
  const auto k = static_cast<Index>(alpha.size());
  if (k == 0) return {1.0, 1.0};
  DenseMatrix t = DenseMatrix::Zero(k, k);
  for (Index i = 0; i < k; ++i) {
    t(i, i) = 1.0 / alpha[static_cast<std::size_t>(i)];
    if (i > 0) t(i, i) += beta[static_cast<std::size_t>(i - 1)] / alpha[static_cast<std::size_t>(i - 1)];
    if (i + 1 < k) {
      const double off = std::sqrt(beta[static_cast<std::size_t>(i)]) / alpha[static_cast<std::size_t>(i)];
      t(i, i + 1) = off;
      t(i + 1, i) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(t, Eigen::EigenvaluesOnly);
  return {eig.eigenvalues()(0), eig.eigenvalues()(k - 1)};
}

} // namespace detail

/// Preconditioned conjugate gradients from x0 = 0, with a Lanczos estimate of
/// the condition number of the preconditioned operator.
inline PcgResult pcg(const SparseMatrix& a, const Vector& b, const Preconditioner& prec, const PcgOptions& opt = {})
{
  PcgResult res;
  res.x = Vector::Zero(b.size());
  const double bnorm = b.norm();
  res.residuals.push_back(bnorm > 0 ? 1.0 : 0.0);
  if (!(bnorm > 0)) {
    res.converged = true;
    return res;
  }
  Vector r = b;
  Vector z = prec ? prec(r) : r;
  Vector p = z;
  double rz = r.dot(z);
  std::vector<double> alphas, betas;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const Vector ap = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0) || !(rz > 0))
      throw SolverError("pcg: operator or preconditioner is not positive definite (iteration " + std::to_string(it) +
                        ", p^T A p = " + std::to_string(pap) + ", r^T z = " + std::to_string(rz) + ")");
    const double alpha = rz / pap;
    res.x += alpha * p;
    r -= alpha * ap;
    alphas.push_back(alpha);
    res.iterations = it;
    const double rel = r.norm() / bnorm;
    res.residuals.push_back(rel);
    if (rel <= opt.tolerance) {
      res.converged = true;
      break;
    }
    z = prec ? prec(r) : r;
    const double rz_next = r.dot(z);
    const double beta = rz_next / rz;
    betas.push_back(beta);
    rz = rz_next;
    p = z + beta * p;
  }
  std::tie(res.lambda_min, res.lambda_max) = detail::lanczos_extremes(alphas, betas);
  res.condition_estimate = res.lambda_max / res.lambda_min;
  if (!res.converged) throw SolverError("pcg: no convergence within the iteration limit");
  return res;
}

/// Additive two-level Schwarz preconditioner on the Dirichlet-eliminated system:
///   M^{-1} = Phi (Phi^T A Phi)^{-1} Phi^T + sum_j R_j^T A_j^{-1} R_j,
/// with A_j the restriction of A to the free DoFs strictly inside Omega_j.
class TwoLevelSchwarz {
public:
  /// `coarse` holds coarse basis columns over the free DoFs (may have zero columns).
  TwoLevelSchwarz(const SparseMatrix& a, const Mesh& mesh, const Decomposition& d, const DofMap& dofs, DenseMatrix coarse,
                  int threads = 1)
      : coarse_(std::move(coarse))
  {
    const auto n = static_cast<std::size_t>(d.size());
    local_dofs_.resize(n);
    solvers_.resize(n);
    const int dim = mesh.dimension();
    parallel_for(n, threads, [&](std::size_t j) {
      std::vector<Index> rows;
      for (Index node : detail::interior_nodes(mesh, d.subdomains[j]))
        for (int c = 0; c < dim; ++c) {
          const Index f = dofs.free_index[static_cast<std::size_t>(node * dim + c)];
          if (f >= 0) rows.push_back(f);
        }
      std::sort(rows.begin(), rows.end());
      if (rows.empty()) return;
      auto solver = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(select_submatrix(a, rows, rows));
      if (solver->info() != Eigen::Success) throw SolverError("schwarz: local factorization failed");
      local_dofs_[j] = std::move(rows);
      solvers_[j] = std::move(solver);
    });
    if (coarse_.cols() > 0) {
      const DenseMatrix ah = coarse_.transpose() * (a * coarse_);
      coarse_solver_.compute(0.5 * (ah + ah.transpose()));
      if (coarse_solver_.info() != Eigen::Success) throw SolverError("schwarz: coarse matrix is not positive definite");
    }
  }

  Vector apply(const Vector& r) const
  {
    Vector z = Vector::Zero(r.size());
    for (std::size_t j = 0; j < solvers_.size(); ++j) {
      if (!solvers_[j]) continue;
      const auto& rows = local_dofs_[j];
      Vector rj(static_cast<Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) rj(static_cast<Index>(i)) = r(rows[i]);
      const Vector zj = solvers_[j]->solve(rj);
      for (std::size_t i = 0; i < rows.size(); ++i) z(rows[i]) += zj(static_cast<Index>(i));
    }
    if (coarse_.cols() > 0) z += coarse_ * coarse_solver_.solve(coarse_.transpose() * r);
    return z;
  }

  Index coarse_size() const { return coarse_.cols(); }

private:
  DenseMatrix coarse_;
  Eigen::LLT<DenseMatrix> coarse_solver_;
  std::vector<std::vector<Index>> local_dofs_;
  std::vector<std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>>> solvers_;
};

/// Rows of the eigenvector columns of a coarse space at the free DoFs;
/// particular columns are left out of the preconditioner.
inline DenseMatrix free_coarse_columns(const CoarseSpace& cs, const DofMap& dofs)
{
  std::vector<Index> cols;
  for (Index c = 0; c < cs.size(); ++c)
    if (std::find(cs.particular_column.begin(), cs.particular_column.end(), c) == cs.particular_column.end())
      cols.push_back(c);
  DenseMatrix out = DenseMatrix::Zero(dofs.num_free(), static_cast<Index>(cols.size()));
  std::vector<Index> col_pos(static_cast<std::size_t>(cs.size()), -1);
  for (std::size_t i = 0; i < cols.size(); ++i) col_pos[static_cast<std::size_t>(cols[i])] = static_cast<Index>(i);
  for (Index c = 0; c < cs.basis.outerSize(); ++c) {
    const Index pc = col_pos[static_cast<std::size_t>(c)];
    if (pc < 0) continue;
    for (SparseMatrix::InnerIterator it(cs.basis, c); it; ++it) {
      const Index f = dofs.free_index[static_cast<std::size_t>(it.row())];
      if (f >= 0) out(f, pc) = it.value();
    }
  }
  return out;
}

/// Columns: iteration, relative_residual.
inline void write_iteration_csv(std::ostream& os, const PcgResult& r)
{
  os << "iteration,relative_residual\n";
  os.precision(12);
  for (std::size_t i = 0; i < r.residuals.size(); ++i) os << i << ',' << r.residuals[i] << '\n';
}

} // namespace msgfem
