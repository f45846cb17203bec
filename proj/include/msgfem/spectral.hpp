#pragma once

#include "msgfem/assembly.hpp"
#include "msgfem/decomp.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace msgfem {

/// Block operators of the A-harmonic eigenproblem on one oversampled subdomain,
/// over the unknowns (phi_1 on B1, phi_2 on B2, multiplier p on B1):
///
///   K = [A11 A12 A11; A21 A22 A21; A11 A12 0],   M = diag(B11, 0, 0),
///
/// with B11 = D_mu A11 D_mu. DoFs in B3 are excluded (zero Dirichlet values).
struct GevpBlocks {
  SparseMatrix a11, a12, a22;
  SparseMatrix b11;
  Vector mu1; ///< partition of unity on B1
  std::vector<Index> b1, b2, b3;
  Index local_size = 0;

  Index n1() const { return static_cast<Index>(b1.size()); }
  Index n2() const { return static_cast<Index>(b2.size()); }

  SparseMatrix saddle() const
  {
    const Index n1_ = n1(), n2_ = n2();
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(3 * a11.nonZeros() + 4 * a12.nonZeros() + a22.nonZeros()));
    auto put = [&t](const SparseMatrix& m, Index r0, Index c0, bool transpose) {
      for (Index j = 0; j < m.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
          if (transpose)
            t.emplace_back(r0 + it.col(), c0 + it.row(), it.value());
          else
            t.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
        }
    };
    put(a11, 0, 0, false);
    put(a12, 0, n1_, false);
    put(a11, 0, n1_ + n2_, false);
    put(a12, n1_, 0, true);
    put(a22, n1_, n1_, false);
    put(a12, n1_, n1_ + n2_, true);
    put(a11, n1_ + n2_, 0, false);
    put(a12, n1_ + n2_, n1_, false);
    SparseMatrix k(2 * n1_ + n2_, 2 * n1_ + n2_);
    k.setFromTriplets(t.begin(), t.end());
    k.makeCompressed();
    return k;
  }

  SparseMatrix rhs() const
  {
    SparseMatrix m(2 * n1() + n2(), 2 * n1() + n2());
    std::vector<Triplet> t;
    for (Index j = 0; j < b11.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(b11, j); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
  }
};

/// Eigenpairs of one local eigenproblem. Eigenvalues are all finite ones found,
/// ascending; vectors are kept for the leading `vectors.cols()` pairs, in the
/// subdomain DoF numbering with zeros on excluded (Dirichlet) DoFs.
struct LocalSpectralBasis {
  Vector eigenvalues;
  DenseMatrix vectors;
  std::vector<double> aharmonic_residuals; ///< per kept vector; empty for classic problems
  int zero_modes = 0;
  int selected = 0;                        ///< m_j
  double next_eigenvalue = std::numeric_limits<double>::infinity(); ///< lambda^{j, m_j + 1}
};

/// Number of leading (numerically) zero eigenvalues: the first index k with
/// lambda_k > ratio * max_{q<k} |lambda_q|, or 0 when no such jump exists.
inline int count_zero_modes(std::span<const double> eigenvalues, double ratio = 1e10)
{
  double largest = 0;
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    if (k > 0 && eigenvalues[k] > ratio * largest) return static_cast<int>(k);
    largest = std::max(largest, std::abs(eigenvalues[k]));
  }
  return 0;
}

inline int count_zero_modes(const Vector& eigenvalues, double ratio = 1e10)
{
  return count_zero_modes(std::span<const double>(eigenvalues.data(), static_cast<std::size_t>(eigenvalues.size())), ratio);
}

struct ModeSelection {
  int modes = 0;
  double next_eigenvalue = std::numeric_limits<double>::infinity();
};

/// Smallest m with 1 / lambda^{m+1} <= t; zero eigenvalues are always selected.
/// When `complete` is set the list holds every finite eigenvalue, so past its
/// end lambda is infinite and the whole finite spectrum is selected; otherwise
/// running out of eigenvalues means more have to be computed.
inline ModeSelection select_modes(std::span<const double> eigenvalues, double threshold, bool complete = true)
{
  if (!(threshold > 0)) throw InvalidArgument("select_modes: threshold must be positive");
  const int zeros = count_zero_modes(eigenvalues);
  for (std::size_t k = static_cast<std::size_t>(zeros); k < eigenvalues.size(); ++k)
    if (eigenvalues[k] > 0 && 1.0 / eigenvalues[k] <= threshold) return {static_cast<int>(k), eigenvalues[k]};
  if (complete) return {static_cast<int>(eigenvalues.size()), std::numeric_limits<double>::infinity()};
  throw SolverError("select_modes: every computed eigenvalue is above the threshold; request more modes");
}

inline ModeSelection select_modes(const Vector& eigenvalues, double threshold, bool complete = true)
{
  return select_modes(std::span<const double>(eigenvalues.data(), static_cast<std::size_t>(eigenvalues.size())), threshold,
                      complete);
}

/// How many modes to take: a fixed count or a 1/lambda threshold.
struct SpectralRequest {
  std::optional<int> modes;
  std::optional<double> threshold;
  bool beyond_zero_modes = false; ///< `modes` counts eigenpairs after the zero modes
  double shift = -1.0;           ///< sigma of the shift-invert factorization
  double infinite_tolerance = 1e-10;
};

namespace detail {

struct PencilResult {
  Vector values;
  DenseMatrix vectors;
};

/// Finite eigenpairs of K x = lambda M x for symmetric K and M = W W^T.
///
/// With L = K - sigma M nonsingular, the nonzero eigenvalues nu of L^{-1} M
/// coincide with those of the symmetric r x r matrix G = W^T L^{-1} W, and
/// lambda = sigma + 1/nu, x = L^{-1} W y / nu. Eigenvalues with
/// nu <= tol * max(nu) are infinite and dropped. Returned vectors are
/// M-orthonormal since x_i^T M x_k = y_i^T y_k.
inline PencilResult solve_projected_pencil(const SparseMatrix& k, const SparseMatrix& m, const DenseMatrix& w,
                                           double shift, double tol, Index keep)
{
  SparseMatrix l = k - shift * m;
  l.makeCompressed();
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(l);
  lu.factorize(l);
  if (lu.info() != Eigen::Success) throw SolverError("local eigenproblem: shifted operator factorization failed");
  const DenseMatrix x = lu.solve(w);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SolverError("local eigenproblem: shifted solve failed");
  DenseMatrix g = w.transpose() * x;
  g = 0.5 * (g + g.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(g);
  if (eig.info() != Eigen::Success) throw SolverError("local eigenproblem: symmetric eigensolver failed");
  const Vector& nu = eig.eigenvalues(); // ascending
  const double nu_max = nu.size() ? nu.maxCoeff() : 0.0;

  std::vector<Index> finite;
  for (Index i = nu.size() - 1; i >= 0; --i)
    if (nu(i) > tol * nu_max) finite.push_back(i);

  PencilResult out;
  out.values.resize(static_cast<Index>(finite.size()));
  for (std::size_t i = 0; i < finite.size(); ++i) out.values(static_cast<Index>(i)) = shift + 1.0 / nu(finite[i]);
  const Index nk = std::min<Index>(keep, static_cast<Index>(finite.size()));
  out.vectors.resize(k.rows(), nk);
  for (Index i = 0; i < nk; ++i) {
    const Index c = finite[static_cast<std::size_t>(i)];
    out.vectors.col(i) = x * eig.eigenvectors().col(c) / nu(c);
  }
  return out;
}

/// Factor W with W W^T = D A D on the support of mu (rows outside the support are zero).
inline DenseMatrix weighted_factor(const SparseMatrix& a, const Vector& mu, Index rows)
{
  std::vector<Index> support;
  for (Index i = 0; i < mu.size(); ++i)
    if (mu(i) > 0) support.push_back(i);
  const auto ns = static_cast<Index>(support.size());
  DenseMatrix dense = DenseMatrix(select_submatrix(a, support, support));
  DenseMatrix w = DenseMatrix::Zero(rows, ns);
  Eigen::LLT<DenseMatrix> llt(dense);
  DenseMatrix factor;
  if (llt.info() == Eigen::Success) {
    factor = llt.matrixL();
  } else {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(dense);
    const Vector ev = eig.eigenvalues().cwiseMax(0.0);
    factor = eig.eigenvectors() * ev.cwiseSqrt().asDiagonal();
  }
  for (Index i = 0; i < ns; ++i) w.row(support[static_cast<std::size_t>(i)]) = mu(support[static_cast<std::size_t>(i)]) * factor.row(i);
  return w;
}

/// D A D for the diagonal D = diag(d); entries that vanish are dropped.
inline SparseMatrix scale_symmetric(const SparseMatrix& a, const Vector& d)
{
  SparseMatrix out = a;
  for (Index j = 0; j < out.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(out, j); it; ++it) it.valueRef() *= d(it.row()) * d(it.col());
  out.prune(0.0);
  out.makeCompressed();
  return out;
}

inline int requested_modes(const SpectralRequest& req, const Vector& eigenvalues, ModeSelection& sel)
{
  const auto nfinite = static_cast<int>(eigenvalues.size());
  if (req.modes) {
    if (*req.modes < 0) throw InvalidArgument("mode count must be non-negative");
    const int m = *req.modes + (req.beyond_zero_modes ? count_zero_modes(eigenvalues) : 0);
    if (m > nfinite) throw SolverError("local eigenproblem: fewer finite modes than requested");
    sel.modes = m;
    sel.next_eigenvalue = m < nfinite ? eigenvalues(m) : std::numeric_limits<double>::infinity();
  } else if (req.threshold) {
    sel = select_modes(eigenvalues, *req.threshold);
  } else {
    throw InvalidArgument("spectral request needs a mode count or a threshold");
  }
  return sel.modes;
}

} // namespace detail

/// Slices the subdomain matrix A_j (over Omega*_j, Subdomain::dofs numbering) by DoF class.
inline GevpBlocks assemble_aharmonic_gevp(const SparseMatrix& a_local, std::span<const Index> b1, std::span<const Index> b2,
                                          std::span<const Index> b3, const Vector& mu)
{
  if (b1.empty()) throw InvalidArgument("assemble_aharmonic_gevp: B1 is empty");
  GevpBlocks g;
  g.b1.assign(b1.begin(), b1.end());
  g.b2.assign(b2.begin(), b2.end());
  g.b3.assign(b3.begin(), b3.end());
  g.local_size = a_local.rows();
  g.a11 = select_submatrix(a_local, b1, b1);
  g.a12 = select_submatrix(a_local, b1, b2);
  g.a22 = select_submatrix(a_local, b2, b2);
  g.mu1.resize(g.n1());
  for (Index i = 0; i < g.n1(); ++i) g.mu1(i) = mu(b1[static_cast<std::size_t>(i)]);
  g.b11 = detail::scale_symmetric(g.a11, g.mu1);
  return g;
}

inline GevpBlocks assemble_aharmonic_gevp(const SparseMatrix& a_local, const Subdomain& s, const Vector& mu)
{
  return assemble_aharmonic_gevp(a_local, s.b1, s.b2, s.b3, mu);
}

/// Relative residual ||[A11 A12] phi|| / (||[A11 A12]||_F ||phi||) of the A-harmonic constraint.
inline double aharmonic_residual(const GevpBlocks& g, const Vector& phi_local)
{
  Vector p1(g.n1()), p2(g.n2());
  for (Index i = 0; i < g.n1(); ++i) p1(i) = phi_local(g.b1[static_cast<std::size_t>(i)]);
  for (Index i = 0; i < g.n2(); ++i) p2(i) = phi_local(g.b2[static_cast<std::size_t>(i)]);
  const Vector r = g.a11 * p1 + g.a12 * p2;
  const double anorm = std::sqrt(g.a11.squaredNorm() + g.a12.squaredNorm());
  const double pnorm = std::sqrt(p1.squaredNorm() + p2.squaredNorm());
  return pnorm > 0 ? r.norm() / (anorm * pnorm) : 0.0;
}

/// Solves the mixed (saddle-point) A-harmonic eigenproblem by exact shift-invert
/// and returns the primal parts padded with zeros on B3.
inline LocalSpectralBasis solve_aharmonic_gevp(const GevpBlocks& g, const SpectralRequest& req)
{
  const Index n1 = g.n1(), n2 = g.n2();
  const SparseMatrix k = g.saddle();
  const SparseMatrix m = g.rhs();
  DenseMatrix w = DenseMatrix::Zero(2 * n1 + n2, 0);
  {
    const DenseMatrix w1 = detail::weighted_factor(g.a11, g.mu1, n1);
    w = DenseMatrix::Zero(2 * n1 + n2, w1.cols());
    w.topRows(n1) = w1;
  }
  // keep vectors for a generous prefix; selection below trims them
  auto pencil = detail::solve_projected_pencil(k, m, w, req.shift, req.infinite_tolerance, w.cols());

  LocalSpectralBasis basis;
  basis.eigenvalues = pencil.values;
  basis.zero_modes = count_zero_modes(basis.eigenvalues);
  ModeSelection sel;
  const int keep = detail::requested_modes(req, basis.eigenvalues, sel);
  basis.selected = sel.modes;
  basis.next_eigenvalue = sel.next_eigenvalue;

  basis.vectors = DenseMatrix::Zero(g.local_size, keep);
  basis.aharmonic_residuals.resize(static_cast<std::size_t>(keep));
  for (Index c = 0; c < keep; ++c) {
    for (Index i = 0; i < n1; ++i) basis.vectors(g.b1[static_cast<std::size_t>(i)], c) = pencil.vectors(i, c);
    for (Index i = 0; i < n2; ++i) basis.vectors(g.b2[static_cast<std::size_t>(i)], c) = pencil.vectors(n1 + i, c);
    basis.aharmonic_residuals[static_cast<std::size_t>(c)] = aharmonic_residual(g, basis.vectors.col(c));
  }
  return basis;
}

/// Classic eigenproblem a_{Omega_j}(phi, v) = lambda a(Xi phi, Xi v) on the
/// overlapping subdomain, over its non-Dirichlet DoFs.
struct ClassicGevp {
  SparseMatrix a;
  SparseMatrix b;
  Vector mu;
  std::vector<Index> kept; ///< positions in the subdomain numbering
  Index local_size = 0;
};

inline ClassicGevp assemble_classic_gevp(const SparseMatrix& a_local, std::span<const Index> dirichlet, const Vector& mu)
{
  ClassicGevp c;
  c.local_size = a_local.rows();
  std::vector<char> excluded(static_cast<std::size_t>(c.local_size), 0);
  for (Index d : dirichlet) excluded[static_cast<std::size_t>(d)] = 1;
  for (Index i = 0; i < c.local_size; ++i)
    if (!excluded[static_cast<std::size_t>(i)]) c.kept.push_back(i);
  if (c.kept.empty()) throw InvalidArgument("assemble_classic_gevp: no free DoFs");
  c.a = select_submatrix(a_local, c.kept, c.kept);
  c.mu.resize(static_cast<Index>(c.kept.size()));
  for (std::size_t i = 0; i < c.kept.size(); ++i) c.mu(static_cast<Index>(i)) = mu(c.kept[i]);
  c.b = detail::scale_symmetric(c.a, c.mu);
  return c;
}

inline LocalSpectralBasis solve_classic_gevp(const ClassicGevp& c, const SpectralRequest& req)
{
  const auto n = static_cast<Index>(c.kept.size());
  const DenseMatrix w = detail::weighted_factor(c.a, c.mu, n);
  auto pencil = detail::solve_projected_pencil(c.a, c.b, w, req.shift, req.infinite_tolerance, w.cols());

  LocalSpectralBasis basis;
  basis.eigenvalues = pencil.values;
  basis.zero_modes = count_zero_modes(basis.eigenvalues);
  ModeSelection sel;
  const int keep = detail::requested_modes(req, basis.eigenvalues, sel);
  basis.selected = sel.modes;
  basis.next_eigenvalue = sel.next_eigenvalue;
  basis.vectors = DenseMatrix::Zero(c.local_size, keep);
  for (Index col = 0; col < keep; ++col)
    for (Index i = 0; i < n; ++i) basis.vectors(c.kept[static_cast<std::size_t>(i)], col) = pencil.vectors(i, col);
  return basis;
}

/// Columns: subdomain, k (1-based), lambda, 1/lambda (inf for zero modes), A-harmonic residual
/// (empty where no vector was kept or the problem has no constraint).
inline void write_spectra_csv(std::ostream& os, const std::vector<LocalSpectralBasis>& bases, Index max_rows = -1)
{
  os << "subdomain,k,lambda,one_over_lambda,aharmonic_residual\n";
  os.precision(12);
  for (std::size_t j = 0; j < bases.size(); ++j) {
    const auto& b = bases[j];
    const Index rows = max_rows < 0 ? b.eigenvalues.size() : std::min(max_rows, b.eigenvalues.size());
    for (Index k = 0; k < rows; ++k) {
      const double lambda = b.eigenvalues(k);
      os << j << ',' << k + 1 << ',' << lambda << ',';
      if (k < b.zero_modes || !(lambda > 0))
        os << "inf";
      else
        os << 1.0 / lambda;
      os << ',';
      if (static_cast<std::size_t>(k) < b.aharmonic_residuals.size()) os << b.aharmonic_residuals[static_cast<std::size_t>(k)];
      os << '\n';
    }
  }
}

} // namespace msgfem
