#include "msgfem/assembly.hpp"
#include "msgfem/solvers.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace msgfem;

namespace {

std::vector<Point> unit_cube(double sx = 1, double sy = 1, double sz = 1)
{
  return {{0, 0, 0}, {sx, 0, 0}, {sx, sy, 0}, {0, sy, 0}, {0, 0, sz}, {sx, 0, sz}, {sx, sy, sz}, {0, sy, sz}};
}

} // namespace

TEST(Assembly, ElementStiffnessIsSymmetricPsdWithRigidKernel)
{
  const auto corners = unit_cube(2.0, 1.0, 0.5);
  const DenseMatrix k = element_stiffness(3, corners, rotated_stiffness(fixture::carbon_like(30)));
  EXPECT_LE((k - k.transpose()).norm(), 1e-12 * k.norm());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(k);
  const Vector ev = eig.eigenvalues();
  for (int i = 0; i < 6; ++i) EXPECT_LE(std::abs(ev(i)), 1e-10 * ev(23));
  EXPECT_GT(ev(6), 1e-6 * ev(23));

  const DenseMatrix r = oracle::rigid_modes(std::vector<Eigen::Vector3d>(corners.begin(), corners.end()));
  EXPECT_LE((k * r).norm(), 1e-10 * k.norm() * r.norm());
}

TEST(Assembly, QuadStiffnessHasThreeRigidModes)
{
  const std::vector<Point> c{{0, 0, 0}, {2, 0, 0}, {2, 1, 0}, {0, 1, 0}};
  const DenseMatrix k = element_stiffness(2, c, rotated_stiffness(fixture::carbon_like(0), 1));
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(k);
  for (int i = 0; i < 3; ++i) EXPECT_LE(std::abs(eig.eigenvalues()(i)), 1e-10 * eig.eigenvalues()(7));
  EXPECT_GT(eig.eigenvalues()(3), 0.0);
}

TEST(Assembly, UniaxialStrainEnergyMatchesClosedForm)
{
  // u = (eps x, 0, 0): energy density C11 eps^2 / 2, exact for trilinear elements
  const auto corners = unit_cube(2.0, 3.0, 0.5);
  const Matrix6 c = rotated_stiffness(fixture::carbon_like(20));
  const DenseMatrix k = element_stiffness(3, corners, c);
  Vector u = Vector::Zero(24);
  for (int a = 0; a < 8; ++a) u(3 * a) = 1e-3 * corners[static_cast<std::size_t>(a)].x();
  EXPECT_NEAR(0.5 * u.dot(k * u), 0.5 * c(0, 0) * 1e-6 * 3.0, 1e-12 * c(0, 0));
}

TEST(Assembly, GlobalNeumannMatrixKernelIsRigidModes)
{
  const auto mesh = fixture::box(3, {3, 2, 2}, {}, 2);
  Assembler asmb(mesh, {fixture::carbon_like(0), fixture::carbon_like(90)});
  const SparseMatrix a = asmb.assemble_neumann();
  const DenseMatrix r = oracle::rigid_modes(std::vector<Eigen::Vector3d>(mesh->nodes().begin(), mesh->nodes().end()));
  EXPECT_LE((a * r).norm(), 1e-9 * DenseMatrix(a).norm() * r.norm());
  EXPECT_LE(SparseMatrix(a - SparseMatrix(a.transpose())).norm(), 1e-12 * a.norm());
}

TEST(Assembly, RestrictionSumsElementMatrices)
{
  const auto mesh = fixture::box(3, {3, 2, 2});
  Assembler asmb(mesh, {fixture::carbon_like(0)});
  const std::vector<Index> elems{0, 1, 4};
  const auto op = asmb.restrict_to(elems);
  EXPECT_TRUE(std::is_sorted(op.dofs.begin(), op.dofs.end()));
  DenseMatrix ref = DenseMatrix::Zero(op.matrix.rows(), op.matrix.cols());
  for (Index e : elems) {
    const auto ed = asmb.element_dofs(e);
    for (std::size_t i = 0; i < ed.size(); ++i)
      for (std::size_t j = 0; j < ed.size(); ++j) {
        const auto li = std::lower_bound(op.dofs.begin(), op.dofs.end(), ed[i]) - op.dofs.begin();
        const auto lj = std::lower_bound(op.dofs.begin(), op.dofs.end(), ed[j]) - op.dofs.begin();
        ref(li, lj) += asmb.element_matrix(e)(static_cast<Index>(i), static_cast<Index>(j));
      }
  }
  EXPECT_LE((DenseMatrix(op.matrix) - ref).norm(), 1e-12 * ref.norm());
}

TEST(Assembly, TractionResultantEqualsTractionTimesArea)
{
  BoundaryRule rule;
  rule.faces[face_id(0, 0)] = BoundaryKind::dirichlet;
  rule.faces[face_id(0, 1)] = BoundaryKind::neumann;
  const auto mesh = std::make_shared<const Mesh>(build_structured_mesh(3, {10, 4, 2}, {5, 2, 2}, {{1.0, 0}}, rule));
  Assembler asmb(mesh, {fixture::carbon_like()});
  auto values = zero_face_values();
  values[face_id(0, 1)] = Point(1.5, 0, -2.0);
  const Vector b = asmb.assemble_load(constant_boundary_data(values, Point(0, 0, 0.25)));
  Point total = Point::Zero();
  for (Index n = 0; n < mesh->num_nodes(); ++n)
    for (int c = 0; c < 3; ++c) total(c) += b(3 * n + c);
  EXPECT_NEAR(total.x(), 1.5 * 8.0, 1e-12);
  EXPECT_NEAR(total.y(), 0.0, 1e-12);
  EXPECT_NEAR(total.z(), -2.0 * 8.0 + 0.25 * 80.0, 1e-12);
}

TEST(Assembly, DirichletDofsAndValues)
{
  const auto spec = fixture::small_beam({4, 1, 3});
  const auto p = setup_problem(spec, false);
  const auto& dm = p.system.dofs;
  const Index face_nodes = 2 * 4;
  EXPECT_EQ(dm.num_dofs - dm.num_free(), 2 * 3 * face_nodes);
  for (Index n = 0; n < p.mesh->num_nodes(); ++n) {
    const double x = p.mesh->node(n).x();
    if (x == 240.0) {
      EXPECT_TRUE(dm.dirichlet(3 * n + 2));
      EXPECT_EQ(dm.dirichlet_values(3 * n + 2), -1.0);
    } else if (x == 0.0) {
      EXPECT_TRUE(dm.dirichlet(3 * n));
      EXPECT_EQ(dm.dirichlet_values(3 * n), 0.0);
    } else {
      EXPECT_FALSE(dm.dirichlet(3 * n + 1));
    }
  }
}

TEST(Assembly, LinearFieldPatchTest)
{
  // Dirichlet data from a linear field on every face: the FE solution is exact.
  BoundaryRule rule;
  for (auto& f : rule.faces) f = BoundaryKind::dirichlet;
  const auto mesh = std::make_shared<const Mesh>(build_structured_mesh(3, {3, 2, 2}, {3, 3, 4}, {{0.5, 0}, {0.5, 1}}, rule));
  Eigen::Matrix3d g;
  g << 1e-3, 2e-3, -1e-3, 0.5e-3, -2e-3, 1e-3, 3e-3, 0, 1e-3;
  BoundaryData data;
  data.dirichlet = [g](const Point& x, int) { return Point(g * x); };
  // a linear field is in equilibrium only if both plies share one stiffness
  Assembler homog(mesh, {fixture::carbon_like(30), fixture::carbon_like(30)});
  const auto sys = assemble_global(homog, data);
  const Vector u = sys.expand(direct_solve(sys.reduced, sys.reduced_rhs));
  for (Index n = 0; n < mesh->num_nodes(); ++n) {
    const Point ex = g * mesh->node(n);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(u(3 * n + c), ex(c), 1e-12);
  }
}

TEST(Assembly, AllNeumannSystemIsRejected)
{
  const auto mesh = fixture::box(3, {2, 2, 2});
  Assembler asmb(mesh, {fixture::carbon_like()});
  EXPECT_THROW(assemble_global(asmb, constant_boundary_data(zero_face_values(), Point::Zero())), InvalidArgument);
}

TEST(Assembly, UndefinedMaterialIsRejected)
{
  const auto mesh = fixture::box(3, {2, 2, 2}, {}, 2);
  EXPECT_THROW(Assembler(mesh, {fixture::carbon_like()}), InvalidArgument);
}

TEST(Assembly, MatrixMarketHeader)
{
  SparseMatrix a(2, 2);
  a.insert(0, 0) = 2.0;
  a.insert(1, 0) = -1.0;
  a.makeCompressed();
  std::ostringstream os;
  write_matrix_market(os, a);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "%%MatrixMarket matrix coordinate real general");
  std::getline(in, line);
  EXPECT_EQ(line, "2 2 2");
  std::getline(in, line);
  EXPECT_EQ(line, "1 1 2");
}
