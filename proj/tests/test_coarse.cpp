#include "msgfem/coarse.hpp"
#include "msgfem/pipeline.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace msgfem;

namespace {

struct Setup {
  Problem problem;
  Decomposition d;
  PartitionOfUnity pou;
  std::vector<LocalSpectralBasis> bases;
};

Setup build(int modes, int os = 2)
{
  Setup s;
  s.problem = setup_problem(fixture::small_beam({12, 2, 3}), true);
  DecompositionSpec ds;
  ds.subdomains = 4;
  ds.overlap = 1;
  ds.oversampling = os;
  s.d = build_decomposition(*s.problem.mesh, ds);
  s.pou = build_pou(*s.problem.mesh, s.d);
  SpectralRequest req;
  req.modes = modes;
  req.beyond_zero_modes = true;
  s.bases = solve_local_spectra(s.problem, s.d, s.pou, req, CoarseKind::aharmonic, 2);
  return s;
}

} // namespace

TEST(Coarse, ColumnsAreOrthonormalPerSubdomain)
{
  const auto s = build(8);
  const auto cs = build_coarse_space(s.d, s.pou, s.bases, solve_local_particulars(s.problem, s.d, 1), s.problem.mesh->num_dofs());
  const DenseMatrix phi = DenseMatrix(cs.basis);
  for (int j = 0; j < s.d.size(); ++j) {
    const Index b = cs.offsets[static_cast<std::size_t>(j)], e = cs.offsets[static_cast<std::size_t>(j) + 1];
    const DenseMatrix block = phi.middleCols(b, e - b);
    EXPECT_LE((block.transpose() * block - DenseMatrix::Identity(e - b, e - b)).norm(), 1e-12);
  }
}

TEST(Coarse, SizeCountsModesAndParticulars)
{
  const auto s = build(8);
  const auto parts = solve_local_particulars(s.problem, s.d, 1);
  const auto cs = build_coarse_space(s.d, s.pou, s.bases, parts, s.problem.mesh->num_dofs());
  Index expected = 0;
  for (const auto& b : s.bases) expected += b.selected;
  int with_particular = 0;
  for (const auto& p : parts) with_particular += p.size() > 0;
  EXPECT_EQ(cs.size() + cs.dropped, expected + with_particular);
  EXPECT_EQ(cs.num_particular(), with_particular);
  // no body load and h = 0 at x = 0: only the slab at x = L has a particular function
  EXPECT_EQ(with_particular, 1);
  EXPECT_EQ(parts[0].size(), 0);
  EXPECT_GT(parts[3].size(), 0);
  for (int j = 0; j < s.d.size(); ++j)
    EXPECT_EQ(cs.particular_fixed[static_cast<std::size_t>(j)] != 0, parts[static_cast<std::size_t>(j)].size() > 0);
}

TEST(Coarse, ColumnsSupportedInOverlappingSubdomain)
{
  const auto s = build(6);
  const auto cs = build_coarse_space(s.d, s.pou, s.bases, {}, s.problem.mesh->num_dofs());
  for (int j = 0; j < s.d.size(); ++j) {
    const auto& sub = s.d.subdomains[static_cast<std::size_t>(j)];
    const auto inner = detail::interior_nodes(*s.problem.mesh, sub);
    for (Index c = cs.offsets[static_cast<std::size_t>(j)]; c < cs.offsets[static_cast<std::size_t>(j) + 1]; ++c)
      for (SparseMatrix::InnerIterator it(cs.basis, c); it; ++it)
        EXPECT_TRUE(std::binary_search(inner.begin(), inner.end(), it.row() / 3));
  }
}

TEST(Coarse, ReproducesManufacturedCoarseFunction)
{
  const auto s = build(10);
  const auto cs = build_coarse_space(s.d, s.pou, s.bases, {}, s.problem.mesh->num_dofs());
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-1, 1);
  Vector c(cs.size());
  for (Index i = 0; i < c.size(); ++i) c(i) = dist(rng);
  const Vector w = cs.basis * c;
  const Vector b = s.problem.system.neumann * w;
  const auto sol = solve_coarse(s.problem.system.neumann, b, cs);
  EXPECT_LE((sol.u - w).norm(), 1e-8 * w.norm());
  EXPECT_LE((sol.coefficients - c).norm(), 1e-8 * c.norm());
}

TEST(Coarse, GalerkinOrthogonality)
{
  const auto s = build(10);
  const auto parts = solve_local_particulars(s.problem, s.d, 1);
  const auto cs = build_coarse_space(s.d, s.pou, s.bases, parts, s.problem.mesh->num_dofs());
  const auto& sys = s.problem.system;
  const auto sol = solve_coarse(sys.neumann, sys.load, cs);
  const Vector r = cs.basis.transpose() * (sys.load - sys.neumann * sol.u);
  std::vector<char> fixed(static_cast<std::size_t>(cs.size()), 0);
  for (std::size_t j = 0; j < cs.particular_column.size(); ++j)
    if (cs.particular_column[j] >= 0 && cs.particular_fixed[j]) fixed[static_cast<std::size_t>(cs.particular_column[j])] = 1;
  const double scale = (cs.basis.transpose() * (sys.neumann * sol.u)).norm();
  for (Index i = 0; i < r.size(); ++i)
    if (!fixed[static_cast<std::size_t>(i)]) {
      EXPECT_LE(std::abs(r(i)), 1e-9 * scale);
    }
  // Dirichlet data is reproduced exactly by the fixed particular columns
  for (Index i = 0; i < sys.dofs.num_dofs; ++i)
    if (sys.dofs.dirichlet(i)) {
      EXPECT_NEAR(sol.u(i), sys.dofs.dirichlet_values(i), 1e-10);
    }
}

TEST(Coarse, ErrorDecreasesWithModes)
{
  const auto base = build(0);
  const auto& p = base.problem;
  double prev = 1e300;
  for (int m : {5, 10, 20}) {
    const auto s = build(m);
    const auto cs = build_coarse_space(s.d, s.pou, s.bases, solve_local_particulars(s.problem, s.d, 1), p.mesh->num_dofs());
    const auto sol = solve_coarse(p.system.neumann, p.system.load, cs);
    const Vector diff = p.reference - sol.u;
    const double err = std::sqrt(diff.dot(p.system.neumann * diff) / p.reference.dot(p.system.neumann * p.reference));
    EXPECT_LT(err, prev) << "modes " << m;
    prev = err;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(Coarse, ParticularSolutionSolvesLocalProblem)
{
  // psi = harmonic lift of h plus the interior load response, psi = h on B3
  const auto s = build(2);
  const auto& sub = s.d.subdomains[3];
  const auto op = s.problem.assembler->restrict_to(sub.oversampled);
  const Vector h = detail::gather(s.problem.system.dofs.dirichlet_values, sub.dofs);
  const Vector f = detail::gather(s.problem.system.load, sub.dofs);
  const Vector psi = local_particular_solution(op.matrix, sub.b1, sub.b2, sub.b3, f, h);
  ASSERT_GT(psi.norm(), 0.0);
  for (Index p : sub.b3) EXPECT_EQ(psi(p), h(p));
  const Vector r = op.matrix * psi - f;
  const double scale = op.matrix.norm() * psi.norm();
  for (Index p : sub.b1) EXPECT_LE(std::abs(r(p)), 1e-12 * scale);
}

TEST(Coarse, MismatchedInputsAreRejected)
{
  const auto s = build(2);
  auto bases = s.bases;
  bases.pop_back();
  EXPECT_THROW(build_coarse_space(s.d, s.pou, bases, {}, s.problem.mesh->num_dofs()), InvalidArgument);
  std::vector<Vector> parts(1);
  EXPECT_THROW(build_coarse_space(s.d, s.pou, s.bases, parts, s.problem.mesh->num_dofs()), InvalidArgument);
}
