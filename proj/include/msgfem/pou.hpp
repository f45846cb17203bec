#pragma once

#include "msgfem/decomp.hpp"

#include <algorithm>
#include <vector>

namespace msgfem {

/// Per-subdomain weights over the oversampled DoFs (Subdomain::dofs numbering).
/// All components of a node share one weight.
struct PartitionOfUnity {
  int overlap = 1;
  int oversampling = 1;
  std::vector<Vector> weights;

  const Vector& operator[](int j) const { return weights[static_cast<std::size_t>(j)]; }
};

namespace detail {

/// Nodes of Omega_j not on its artificial boundary; the DoFs whose basis
/// functions are supported inside the overlapping subdomain.
inline std::vector<Index> interior_nodes(const Mesh& mesh, const Subdomain& s)
{
  const auto bn = boundary_nodes(mesh, s.overlap);
  std::vector<Index> out;
  std::set_difference(bn.all.begin(), bn.all.end(), bn.artificial.begin(), bn.artificial.end(), std::back_inserter(out));
  return out;
}

inline PartitionOfUnity normalize(const Mesh& mesh, const Decomposition& d, std::vector<Vector> node_weights)
{
  const int dim = mesh.dimension();
  Vector total = Vector::Zero(mesh.num_nodes());
  for (int j = 0; j < d.size(); ++j) {
    const auto& s = d.subdomains[static_cast<std::size_t>(j)];
    for (Index i = 0; i < node_weights[static_cast<std::size_t>(j)].size(); ++i)
      total(s.dofs[static_cast<std::size_t>(i * dim)] / dim) += node_weights[static_cast<std::size_t>(j)](i);
  }
  for (Index n = 0; n < total.size(); ++n)
    if (!(total(n) > 0))
      throw InvalidArgument("partition of unity: a DoF has zero total weight (overlap too small or disconnected decomposition)");

  PartitionOfUnity pou;
  pou.overlap = d.overlap;
  pou.oversampling = d.oversampling;
  pou.weights.resize(static_cast<std::size_t>(d.size()));
  for (int j = 0; j < d.size(); ++j) {
    const auto& s = d.subdomains[static_cast<std::size_t>(j)];
    const auto& w = node_weights[static_cast<std::size_t>(j)];
    Vector mu(s.size());
    for (Index i = 0; i < w.size(); ++i) {
      const double v = w(i) / total(s.dofs[static_cast<std::size_t>(i * dim)] / dim);
      for (int c = 0; c < dim; ++c) mu(i * dim + c) = v;
    }
    pou.weights[static_cast<std::size_t>(j)] = std::move(mu);
  }
  return pou;
}

} // namespace detail

/// Smooth partition of unity: weights start at 0 on the artificial boundary of
/// Omega_j and on the oversampling layers, 2o elsewhere, and are lowered by
/// 2o - 1 Jacobi sweeps of w_p <- min(w_p, min_q w_q + 1, 2o) over the node graph.
inline PartitionOfUnity build_pou(const Mesh& mesh, const Decomposition& d)
{
  const int o = d.overlap;
  if (o < 1 || o > d.oversampling) throw InvalidArgument("build_pou: need 1 <= o <= o*");
  const int dim = mesh.dimension();
  std::vector<Vector> node_weights(static_cast<std::size_t>(d.size()));
  std::vector<Index> local(static_cast<std::size_t>(mesh.num_nodes()), -1);

  for (int j = 0; j < d.size(); ++j) {
    const auto& s = d.subdomains[static_cast<std::size_t>(j)];
    const Index nn = s.size() / dim;
    for (Index i = 0; i < nn; ++i) local[static_cast<std::size_t>(s.dofs[static_cast<std::size_t>(i * dim)] / dim)] = i;

    Vector w = Vector::Zero(nn);
    for (Index n : detail::interior_nodes(mesh, s)) w(local[static_cast<std::size_t>(n)]) = 2.0 * o;

    for (int sweep = 0; sweep < 2 * o - 1; ++sweep) {
      Vector next = w;
      for (Index e : s.oversampled) {
        const auto en = mesh.element_nodes(e);
        for (Index a : en)
          for (Index b : en) {
            const Index la = local[static_cast<std::size_t>(a)], lb = local[static_cast<std::size_t>(b)];
            next(la) = std::min(next(la), w(lb) + 1.0);
          }
      }
      w = next.cwiseMin(2.0 * o);
    }
    node_weights[static_cast<std::size_t>(j)] = std::move(w);
    for (Index i = 0; i < nn; ++i) local[static_cast<std::size_t>(s.dofs[static_cast<std::size_t>(i * dim)] / dim)] = -1;
  }
  return detail::normalize(mesh, d, std::move(node_weights));
}

/// Counting partition of unity, 1 / #{i : p interior to Omega_i}.
inline PartitionOfUnity counting_pou(const Mesh& mesh, const Decomposition& d)
{
  const int dim = mesh.dimension();
  std::vector<Vector> node_weights(static_cast<std::size_t>(d.size()));
  for (int j = 0; j < d.size(); ++j) {
    const auto& s = d.subdomains[static_cast<std::size_t>(j)];
    Vector w = Vector::Zero(s.size() / dim);
    std::vector<Index> node_list(static_cast<std::size_t>(w.size()));
    for (Index i = 0; i < w.size(); ++i) node_list[static_cast<std::size_t>(i)] = s.dofs[static_cast<std::size_t>(i * dim)] / dim;
    for (Index n : detail::interior_nodes(mesh, s))
      w(std::lower_bound(node_list.begin(), node_list.end(), n) - node_list.begin()) = 1.0;
    node_weights[static_cast<std::size_t>(j)] = std::move(w);
  }
  return detail::normalize(mesh, d, std::move(node_weights));
}

/// Sum_j R_j^T (mu_j .* v|_j): reconstructs v wherever the weights sum to one.
inline Vector pou_reconstruct(const Decomposition& d, const PartitionOfUnity& pou, const Vector& v)
{
  Vector out = Vector::Zero(v.size());
  for (int j = 0; j < d.size(); ++j) {
    const auto& s = d.subdomains[static_cast<std::size_t>(j)];
    const auto& mu = pou[j];
    for (Index i = 0; i < s.size(); ++i) out(s.dofs[static_cast<std::size_t>(i)]) += mu(i) * v(s.dofs[static_cast<std::size_t>(i)]);
  }
  return out;
}

} // namespace msgfem
