#pragma once

#include "msgfem/analysis.hpp"
#include "msgfem/coarse.hpp"
#include "msgfem/parallel.hpp"
#include "msgfem/pou.hpp"
#include "msgfem/solvers.hpp"
#include "msgfem/spectral.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace msgfem {

inline std::array<Point, 6> zero_face_values()
{
  std::array<Point, 6> v;
  v.fill(Point::Zero());
  return v;
}

struct ProblemSpec {
  int dimension = 3;
  std::array<double, 3> extents{500.0, 140.0, 6.0}; ///< mm
  std::array<Index, 3> counts{20, 6, 3};
  std::vector<OrthotropicMaterial> materials;        ///< one per ply, angle included
  std::vector<double> ply_fractions;                 ///< empty means equal plies
  BoundaryRule rule;
  std::array<Point, 6> face_values = zero_face_values(); ///< displacement (mm) or traction (MPa) per face
  Point body_force = Point::Zero();                  ///< N/mm^3
};

struct DecompositionSpec {
  int subdomains = 8;
  PartitionStrategy strategy = PartitionStrategy::structured_blocks;
  std::array<int, 3> blocks{0, 0, 0};
  int overlap = 1;
  int oversampling = 2;
};

enum class CoarseKind { aharmonic, classic };

/// Fine-scale problem and its reference solution.
struct Problem {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const Assembler> assembler;
  BoundaryData data;
  LinearSystem system;
  Vector reference;          ///< u_h over all DoFs
  FieldSample reference_fields;
};

inline Problem setup_problem(const ProblemSpec& spec, bool solve_reference = true)
{
  if (spec.materials.empty()) throw InvalidArgument("problem: at least one ply material is required");
  std::vector<Ply> plies;
  const auto np = spec.materials.size();
  if (!spec.ply_fractions.empty() && spec.ply_fractions.size() != np)
    throw InvalidArgument("problem: ply fraction count does not match the ply count");
  for (std::size_t i = 0; i < np; ++i)
    plies.push_back({spec.ply_fractions.empty() ? 1.0 / static_cast<double>(np) : spec.ply_fractions[i], static_cast<int>(i)});
  if (spec.ply_fractions.empty() && np > 0) {
    // equal plies: make the fractions sum to one exactly
    double rest = 1.0;
    for (std::size_t i = 0; i + 1 < np; ++i) rest -= plies[i].thickness_fraction;
    plies.back().thickness_fraction = rest;
  }

  Problem p;
  p.mesh = std::make_shared<const Mesh>(build_structured_mesh(spec.dimension, spec.extents, spec.counts, plies, spec.rule));
  p.assembler = std::make_shared<const Assembler>(p.mesh, spec.materials);
  p.data = constant_boundary_data(spec.face_values, spec.body_force);
  p.system = assemble_global(*p.assembler, p.data);
  if (solve_reference) {
    p.reference = p.system.expand(direct_solve(p.system.reduced, p.system.reduced_rhs));
    p.reference_fields = compute_strain_stress(*p.assembler, p.reference);
  }
  return p;
}

inline Decomposition build_decomposition(const Mesh& mesh, const DecompositionSpec& spec, CoarseKind kind = CoarseKind::aharmonic)
{
  auto owner = partition_nonoverlapping(mesh, spec.subdomains, spec.strategy, spec.blocks);
  const int os = kind == CoarseKind::classic ? spec.overlap : spec.oversampling;
  return decompose(mesh, std::move(owner), spec.overlap, os);
}

/// Local eigenproblems on every subdomain, one task each.
inline std::vector<LocalSpectralBasis> solve_local_spectra(const Problem& p, const Decomposition& d, const PartitionOfUnity& pou,
                                                           const SpectralRequest& req, CoarseKind kind, int threads)
{
  std::vector<LocalSpectralBasis> bases(static_cast<std::size_t>(d.size()));
  parallel_for(bases.size(), threads, [&](std::size_t j) {
    const auto& s = d.subdomains[j];
    const auto op = p.assembler->restrict_to(s.oversampled);
    if (kind == CoarseKind::aharmonic) {
      bases[j] = solve_aharmonic_gevp(assemble_aharmonic_gevp(op.matrix, s, pou[static_cast<int>(j)]), req);
    } else {
      bases[j] = solve_classic_gevp(assemble_classic_gevp(op.matrix, s.b3, pou[static_cast<int>(j)]), req);
    }
  });
  return bases;
}

inline std::vector<Vector> solve_local_particulars(const Problem& p, const Decomposition& d, int threads)
{
  std::vector<Vector> out(static_cast<std::size_t>(d.size()));
  parallel_for(out.size(), threads, [&](std::size_t j) {
    const auto& s = d.subdomains[j];
    const auto op = p.assembler->restrict_to(s.oversampled);
    Vector psi = local_particular_solution(op.matrix, s, p.system.load, p.system.dofs.dirichlet_values);
    if (psi.squaredNorm() > 0) out[j] = std::move(psi);
  });
  return out;
}

struct CoarseRun {
  Decomposition decomposition;
  PartitionOfUnity pou;
  std::vector<LocalSpectralBasis> bases;
  CoarseSpace space;
  CoarseSolution solution;
  FieldSample fields;
  RelativeErrors errors;
  double lambda_out_min = std::numeric_limits<double>::infinity(); ///< min_j lambda^{j, m_j + 1}

  double reduction_factor(Index num_dofs) const
  {
    return space.size() > 0 ? static_cast<double>(num_dofs) / static_cast<double>(space.size()) : 0.0;
  }
};

/// Coarse approximation (MS-GFEM for the A-harmonic kind, a GenEO-type
/// stand-alone coarse space on Omega_j for the classic kind) and its errors.
inline CoarseRun run_coarse(const Problem& p, const DecompositionSpec& dspec, const SpectralRequest& req, CoarseKind kind,
                            int threads)
{
  CoarseRun r;
  r.decomposition = build_decomposition(*p.mesh, dspec, kind);
  r.pou = build_pou(*p.mesh, r.decomposition);
  r.bases = solve_local_spectra(p, r.decomposition, r.pou, req, kind, threads);
  const auto particulars = solve_local_particulars(p, r.decomposition, threads);
  r.space = build_coarse_space(r.decomposition, r.pou, r.bases, particulars, p.mesh->num_dofs());
  r.solution = solve_coarse(p.system.neumann, p.system.load, r.space);
  for (const auto& b : r.bases) r.lambda_out_min = std::min(r.lambda_out_min, b.next_eigenvalue);
  if (p.reference.size() > 0) {
    r.fields = compute_strain_stress(*p.assembler, r.solution.u);
    r.errors = relative_errors(p.system.neumann, p.reference, r.solution.u, p.reference_fields, r.fields);
  }
  return r;
}

struct SchwarzRun {
  Decomposition decomposition;
  std::vector<LocalSpectralBasis> bases;
  PcgResult pcg;
  Index coarse_size = 0;
  double lambda_out_min = std::numeric_limits<double>::infinity();
};

/// PCG on the eliminated system with the two-level additive Schwarz
/// preconditioner and a classic GenEO coarse space.
inline SchwarzRun run_schwarz(const Problem& p, const DecompositionSpec& dspec, const SpectralRequest& req, const PcgOptions& opt,
                              int threads)
{
  SchwarzRun r;
  r.decomposition = build_decomposition(*p.mesh, dspec, CoarseKind::classic);
  const auto pou = build_pou(*p.mesh, r.decomposition);
  r.bases = solve_local_spectra(p, r.decomposition, pou, req, CoarseKind::classic, threads);
  for (const auto& b : r.bases) r.lambda_out_min = std::min(r.lambda_out_min, b.next_eigenvalue);
  const auto space = build_coarse_space(r.decomposition, pou, r.bases, {}, p.mesh->num_dofs());
  TwoLevelSchwarz prec(p.system.reduced, *p.mesh, r.decomposition, p.system.dofs, free_coarse_columns(space, p.system.dofs),
                       threads);
  r.coarse_size = prec.coarse_size();
  r.pcg = pcg(p.system.reduced, p.system.reduced_rhs, [&prec](const Vector& v) { return prec.apply(v); }, opt);
  return r;
}

} // namespace msgfem
