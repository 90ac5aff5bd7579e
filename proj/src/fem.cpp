#include "eldtn/fem.hpp"

#include <algorithm>

#include "eldtn/analytic.hpp"
#include "eldtn/quadrature.hpp"

namespace eldtn {

DofMap build_dofmap(const PeriodicTetMesh& mesh, const Incidence<double>& incidence) {
  const int nv = mesh.num_vertices();
  if (static_cast<int>(mesh.x1_image.size()) != nv || static_cast<int>(mesh.on_surface.size()) != nv)
    throw MeshError("build_dofmap: mesh faces are not classified");
  DofMap d;
  const Complex I(0, 1);
  d.phase_x1 = std::exp(I * incidence.alpha(0) * mesh.Lambda1);
  d.phase_x2 = std::exp(I * incidence.alpha(1) * mesh.Lambda2);
  d.node.assign(nv, -1);
  d.master.resize(nv);
  d.phase.assign(nv, Complex(1.0));
  d.dirichlet.assign(nv, 0);

  for (int v = 0; v < nv; ++v) {
    int m = v;
    Complex ph(1.0);
    for (int hops = 0; hops < 4; ++hops) {
      if (mesh.x1_image[m] >= 0) {
        ph *= d.phase_x1;
        m = mesh.x1_image[m];
      } else if (mesh.x2_image[m] >= 0) {
        ph *= d.phase_x2;
        m = mesh.x2_image[m];
      } else {
        break;
      }
    }
    d.master[v] = m;
    d.phase[v] = ph;
    d.dirichlet[v] = mesh.on_surface[v];
  }
  for (int v = 0; v < nv; ++v)
    if (d.master[v] == v && !d.dirichlet[v]) d.node[v] = d.n_nodes++;
  for (int v = 0; v < nv; ++v) {
    if (d.dirichlet[v]) continue;
    if (d.dirichlet[d.master[v]]) throw MeshError("build_dofmap: slave of a Dirichlet vertex is not Dirichlet");
    d.node[v] = d.node[d.master[v]];
  }
  d.n_free = 3 * d.n_nodes;
  return d;
}

std::vector<CVec3> dirichlet_lift(const PeriodicTetMesh& mesh, const DofMap& dofs,
                                  const Medium<double>& medium, const Incidence<double>& incidence) {
  std::vector<CVec3> lift(mesh.num_vertices(), CVec3::Zero());
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (dofs.dirichlet[v]) lift[v] = -incident(incidence, medium, mesh.vertices[v]);
  return lift;
}

Field make_field(const DofMap& dofs, const Eigen::VectorXcd& coefficients,
                 const std::vector<CVec3>& lift) {
  if (coefficients.size() != dofs.n_free) throw InvalidParameter("make_field: coefficient length mismatch");
  Field f;
  f.coefficients = coefficients;
  f.nodal.resize(dofs.node.size());
  for (std::size_t v = 0; v < dofs.node.size(); ++v) {
    if (dofs.dirichlet[v]) {
      f.nodal[v] = lift[v];
    } else {
      f.nodal[v] = dofs.phase[v] * coefficients.segment<3>(3 * dofs.node[v]);
    }
  }
  return f;
}

CMat3 element_gradient(const PeriodicTetMesh& mesh, const Field& field, int t) {
  const Eigen::Matrix<double, 4, 3> G = mesh.barycentric_gradients(t);
  CMat3 grad = CMat3::Zero();
  for (int i = 0; i < 4; ++i) grad += field.nodal[mesh.tets[t].v[i]] * G.row(i).cast<Complex>();
  return grad;
}

ElementMatrix element_matrix(const Eigen::Matrix<double, 4, 3>& grads, double volume,
                             const Medium<double>& medium) {
  const double mu = medium.mu, lm = medium.lambda + medium.mu, w2 = medium.omega * medium.omega;
  ElementMatrix K;
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      const double gg = grads.row(i).dot(grads.row(j));
      const double mass = volume * (i == j ? 0.1 : 0.05);
      for (int d = 0; d < 3; ++d)
        for (int c = 0; c < 3; ++c) {
          double k = lm * grads(i, d) * grads(j, c) * volume;
          if (c == d) k += mu * gg * volume - w2 * mass;
          K(3 * i + d, 3 * j + c) = k;
          K(3 * j + c, 3 * i + d) = k;
        }
    }
  return K;
}

VolumeSystem assemble_volume(const PeriodicTetMesh& mesh, const DofMap& dofs,
                             const Medium<double>& medium, const std::vector<CVec3>& lift) {
  const int nn = dofs.n_nodes;
  // Node adjacency through shared tets, sorted, self included.
  std::vector<std::vector<int>> adj(nn);
  for (const Tet& t : mesh.tets)
    for (int a : t.v) {
      const int na = dofs.node[a];
      if (na < 0) continue;
      for (int b : t.v)
        if (dofs.node[b] >= 0) adj[na].push_back(dofs.node[b]);
    }
  std::vector<int> col_ptr(3 * std::size_t(nn) + 1, 0);
  for (int k = 0; k < nn; ++k) {
    auto& a = adj[k];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    for (int c = 0; c < 3; ++c) col_ptr[3 * k + c + 1] = col_ptr[3 * k + c] + 3 * static_cast<int>(a.size());
  }
  const Eigen::Index nnz = col_ptr.back();
  std::vector<int> rows(nnz);
  for (int k = 0; k < nn; ++k)
    for (int c = 0; c < 3; ++c) {
      Eigen::Index p = col_ptr[3 * k + c];
      for (int m : adj[k])
        for (int d = 0; d < 3; ++d) rows[p++] = 3 * m + d;
    }
  std::vector<Complex> values(nnz, Complex(0.0));
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(dofs.n_free);

  for (int t = 0; t < mesh.num_tets(); ++t) {
    const Tet& tet = mesh.tets[t];
    const double vol = mesh.tet_volume(t);
    if (!(vol > 1e-14 * std::pow(mesh.longest_edge(t), 3)))
      throw MeshError("assemble_volume: degenerate tet " + std::to_string(t));
    const ElementMatrix K = element_matrix(mesh.barycentric_gradients(t), vol, medium);
    for (int i = 0; i < 4; ++i) {
      const int ni = dofs.node[tet.v[i]];
      if (ni < 0) continue;
      const Complex pi = std::conj(dofs.phase[tet.v[i]]);
      for (int j = 0; j < 4; ++j) {
        const int vj = tet.v[j];
        const int nj = dofs.node[vj];
        if (nj < 0) {
          // Dirichlet column moves to the right-hand side.
          for (int d = 0; d < 3; ++d)
            for (int c = 0; c < 3; ++c) rhs(3 * ni + d) -= pi * K(3 * i + d, 3 * j + c) * lift[vj](c);
          continue;
        }
        const Complex ph = pi * dofs.phase[vj];
        const auto& a = adj[nj];
        const Eigen::Index idx = std::lower_bound(a.begin(), a.end(), ni) - a.begin();
        for (int c = 0; c < 3; ++c) {
          const Eigen::Index base = col_ptr[3 * nj + c] + 3 * idx;
          for (int d = 0; d < 3; ++d) values[base + d] += ph * K(3 * i + d, 3 * j + c);
        }
      }
    }
  }

  VolumeSystem sys;
  const Eigen::Map<const SparseMatrixC> map(dofs.n_free, dofs.n_free, nnz, col_ptr.data(), rows.data(),
                                             values.data());
  sys.A = map;
  sys.rhs = std::move(rhs);
  return sys;
}

double h1_error(const PeriodicTetMesh& mesh, const Field& field,
                const std::function<CMat3(const Vec3&)>& exact_gradient) {
  const TetRule rule = tet_degree2_rule();
  double sum = 0.0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const CMat3 gh = element_gradient(mesh, field, t);
    const auto& v = mesh.tets[t].v;
    const Vec3 x0 = mesh.vertices[v[0]];
    Eigen::Matrix3d J;
    for (int i = 0; i < 3; ++i) J.col(i) = mesh.vertices[v[i + 1]] - x0;
    const double jac = std::abs(J.determinant());
    for (std::size_t q = 0; q < rule.w.size(); ++q)
      sum += rule.w[q] * jac * (exact_gradient(x0 + J * rule.x[q]) - gh).squaredNorm();
  }
  return std::sqrt(sum);
}

double element_l2_norm(const PeriodicTetMesh& mesh, const Field& field, int t) {
  const auto& v = mesh.tets[t].v;
  const double vol = mesh.tet_volume(t);
  // Integral of |u|^2 = (vol / 20) (sum_i |u_i|^2 + |sum_i u_i|^2).
  double diag = 0.0;
  CVec3 total = CVec3::Zero();
  for (int i = 0; i < 4; ++i) {
    diag += field.nodal[v[i]].squaredNorm();
    total += field.nodal[v[i]];
  }
  return std::sqrt(vol / 20.0 * (diag + total.squaredNorm()));
}

}  // namespace eldtn
