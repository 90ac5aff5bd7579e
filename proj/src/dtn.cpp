#include "eldtn/dtn.hpp"

#include <numbers>

#include "eldtn/quadrature.hpp"

namespace eldtn {

TraceMoments trace_moments(const PeriodicTetMesh& mesh, const Incidence<double>& incidence, int N) {
  if (N < 0) throw InvalidParameter("trace_moments: N must be nonnegative");
  TraceMoments tm;
  tm.N = N;
  tm.column.assign(mesh.num_vertices(), -1);
  for (const Face& f : mesh.faces)
    if (f.tag == FaceTag::top)
      for (int v : f.v)
        if (tm.column[v] < 0) {
          tm.column[v] = static_cast<int>(tm.vertices.size());
          tm.vertices.push_back(v);
        }

  const int side = 2 * N + 1;
  const double two_pi = 2 * std::numbers::pi;
  const double inv_area = 1.0 / (mesh.Lambda1 * mesh.Lambda2);
  tm.W = Eigen::MatrixXcd::Zero(side * side, static_cast<Eigen::Index>(tm.vertices.size()));
  const Complex I(0, 1);
  for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
    const Face& face = mesh.faces[f];
    if (face.tag != FaceTag::top) continue;
    const Vec3 &a = mesh.vertices[face.v[0]], &b = mesh.vertices[face.v[1]], &c = mesh.vertices[face.v[2]];
    const double area = 0.5 * std::abs((b(0) - a(0)) * (c(1) - a(1)) - (b(1) - a(1)) * (c(0) - a(0)));
    const std::array<int, 3> cols{tm.column[face.v[0]], tm.column[face.v[1]], tm.column[face.v[2]]};
    for (int n1 = -N; n1 <= N; ++n1) {
      const double k1 = incidence.alpha(0) + two_pi * n1 / mesh.Lambda1;
      for (int n2 = -N; n2 <= N; ++n2) {
        const double k2 = incidence.alpha(1) + two_pi * n2 / mesh.Lambda2;
        const std::array<Complex, 3> z{-I * (k1 * a(0) + k2 * a(1)), -I * (k1 * b(0) + k2 * b(1)),
                                       -I * (k1 * c(0) + k2 * c(1))};
        const std::array<Complex, 3> mom = triangle_exp_moments(z, area);
        const int row = (n1 + N) * side + n2 + N;
        for (int i = 0; i < 3; ++i) tm.W(row, cols[i]) += inv_area * mom[i];
      }
    }
  }
  return tm;
}

BoundarySpectrum fourier_trace(const TraceMoments& moments, const std::vector<CVec3>& nodal) {
  Eigen::MatrixXcd U(moments.vertices.size(), 3);
  for (std::size_t j = 0; j < moments.vertices.size(); ++j) U.row(j) = nodal[moments.vertices[j]].transpose();
  const Eigen::MatrixXcd C = moments.W * U;
  BoundarySpectrum s;
  s.N = moments.N;
  s.coeffs.resize(C.rows());
  for (Eigen::Index m = 0; m < C.rows(); ++m) s.coeffs[m] = C.row(m).transpose();
  return s;
}

BoundarySpectrum fourier_trace(const PeriodicTetMesh& mesh, const Incidence<double>& incidence,
                               const std::vector<CVec3>& nodal, int N) {
  return fourier_trace(trace_moments(mesh, incidence, N), nodal);
}

BoundarySpectrum apply_TN(const BoundarySpectrum& spectrum, const ModeTable<double>& modes) {
  if (modes.N() != spectrum.N) throw InvalidParameter("apply_TN: spectrum and mode table differ in N");
  BoundarySpectrum out = spectrum;
  for (int m = 0; m < modes.size(); ++m) out.coeffs[m] = modes[m].M * spectrum.coeffs[m];
  return out;
}

CVec3 evaluate_spectrum(const BoundarySpectrum& spectrum, const Incidence<double>& incidence,
                        const Lattice<double>& lattice, const Vec2& r) {
  const int N = spectrum.N;
  const Complex I(0, 1);
  const double two_pi = 2 * std::numbers::pi;
  // Separable phases exp(i alpha_n . r) = exp(i a1 x) exp(i a2 y).
  std::vector<Complex> e1(2 * N + 1), e2(2 * N + 1);
  for (int n = -N; n <= N; ++n) {
    e1[n + N] = std::exp(I * (incidence.alpha(0) + two_pi * n / lattice.Lambda1) * r(0));
    e2[n + N] = std::exp(I * (incidence.alpha(1) + two_pi * n / lattice.Lambda2) * r(1));
  }
  CVec3 sum = CVec3::Zero();
  for (int n1 = -N; n1 <= N; ++n1) {
    CVec3 row = CVec3::Zero();
    for (int n2 = -N; n2 <= N; ++n2) row += e2[n2 + N] * spectrum.at({n1, n2});
    sum += e1[n1 + N] * row;
  }
  return sum;
}

CVec3 evaluate_TN(const BoundarySpectrum& spectrum, const ModeTable<double>& modes,
                  const Incidence<double>& incidence, const Lattice<double>& lattice, const Vec2& r) {
  return evaluate_spectrum(apply_TN(spectrum, modes), incidence, lattice, r);
}

DtnBlock::DtnBlock(const PeriodicTetMesh& mesh, const DofMap& dofs, const ModeTable<double>& modes,
                   const Incidence<double>& incidence, int dense_threshold)
    : N_(modes.N()), n_free_(dofs.n_free), area_(mesh.Lambda1 * mesh.Lambda2), modes_(modes) {
  const TraceMoments tm = trace_moments(mesh, incidence, N_);
  std::vector<int> column_of_node(dofs.n_nodes, -1);
  for (int v : tm.vertices) {
    const int k = dofs.node[v];
    if (k < 0) throw MeshError("DtnBlock: Dirichlet vertex on the top boundary");
    if (column_of_node[k] < 0) {
      column_of_node[k] = static_cast<int>(nodes_.size());
      nodes_.push_back(k);
    }
  }
  // The trace of a node's basis function includes its quasi-periodic copies.
  Wn_ = Eigen::MatrixXcd::Zero(tm.W.rows(), static_cast<Eigen::Index>(nodes_.size()));
  for (std::size_t j = 0; j < tm.vertices.size(); ++j) {
    const int v = tm.vertices[j];
    Wn_.col(column_of_node[dofs.node[v]]) += dofs.phase[v] * tm.W.col(static_cast<Eigen::Index>(j));
  }
  G_.resize(modes.size());
  for (int m = 0; m < modes.size(); ++m) G_[m] = -area_ * modes[m].M;
  representation_ = num_boundary_dofs() <= dense_threshold ? Representation::dense_block
                                                           : Representation::low_rank;
}

Eigen::VectorXcd DtnBlock::forward(const Eigen::VectorXcd& x) const {
  Eigen::MatrixXcd X(nodes_.size(), 3);
  for (std::size_t j = 0; j < nodes_.size(); ++j) X.row(j) = x.segment<3>(3 * nodes_[j]).transpose();
  const Eigen::MatrixXcd Y = Wn_ * X;
  Eigen::VectorXcd y(rank());
  for (Eigen::Index m = 0; m < Y.rows(); ++m) y.segment<3>(3 * m) = Y.row(m).transpose();
  return y;
}

Eigen::VectorXcd DtnBlock::adjoint(const Eigen::VectorXcd& y) const {
  Eigen::MatrixXcd Y(num_modes(), 3);
  for (int m = 0; m < num_modes(); ++m) Y.row(m) = y.segment<3>(3 * m).transpose();
  const Eigen::MatrixXcd X = Wn_.adjoint() * Y;
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n_free_);
  for (std::size_t j = 0; j < nodes_.size(); ++j) x.segment<3>(3 * nodes_[j]) = X.row(j).transpose();
  return x;
}

Eigen::VectorXcd DtnBlock::apply_weights(const Eigen::VectorXcd& y) const {
  Eigen::VectorXcd out(y.size());
  for (int m = 0; m < num_modes(); ++m) out.segment<3>(3 * m) = G_[m] * y.segment<3>(3 * m);
  return out;
}

Eigen::VectorXcd DtnBlock::apply(const Eigen::VectorXcd& x) const { return adjoint(apply_weights(forward(x))); }

Eigen::MatrixXcd DtnBlock::dense() const {
  const Eigen::Index nb = static_cast<Eigen::Index>(nodes_.size());
  Eigen::MatrixXcd D(3 * nb, 3 * nb);
  Eigen::MatrixXcd scaled(Wn_.rows(), Wn_.cols());
  for (int d = 0; d < 3; ++d)
    for (int c = 0; c < 3; ++c) {
      for (int m = 0; m < num_modes(); ++m) scaled.row(m) = G_[m](d, c) * Wn_.row(m);
      const Eigen::MatrixXcd block = Wn_.adjoint() * scaled;
      for (Eigen::Index i = 0; i < nb; ++i)
        for (Eigen::Index j = 0; j < nb; ++j) D(3 * i + d, 3 * j + c) = block(i, j);
    }
  return D;
}

}  // namespace eldtn
