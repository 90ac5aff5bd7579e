#pragma once

#include <vector>

#include <Eigen/Dense>

#include "eldtn/fem.hpp"
#include "eldtn/mesh.hpp"
#include "eldtn/spectral.hpp"

namespace eldtn {

/// Fourier coefficients u_n(h) of a trace on the top boundary for the square
/// |n1|, |n2| <= N, in ModeTable order.
struct BoundarySpectrum {
  int N = 0;
  std::vector<CVec3> coeffs;

  int index(ModeIndex n) const { return (n[0] + N) * (2 * N + 1) + n[1] + N; }
  const CVec3& at(ModeIndex n) const { return coeffs[index(n)]; }
  CVec3& at(ModeIndex n) { return coeffs[index(n)]; }
};

/// W(m, j) = (1 / (Lambda1 Lambda2)) * integral over the top boundary of
/// lambda_j exp(-i alpha_m . r), for every top vertex j (columns) and mode m
/// (rows, ModeTable order). Each triangle is integrated in closed form.
struct TraceMoments {
  int N = 0;
  std::vector<int> vertices;      // top vertices, column order
  std::vector<int> column;        // mesh vertex -> column, -1 off the top
  Eigen::MatrixXcd W;
};

TraceMoments trace_moments(const PeriodicTetMesh& mesh, const Incidence<double>& incidence, int N);

BoundarySpectrum fourier_trace(const TraceMoments& moments, const std::vector<CVec3>& nodal);

BoundarySpectrum fourier_trace(const PeriodicTetMesh& mesh, const Incidence<double>& incidence,
                               const std::vector<CVec3>& nodal, int N);

BoundarySpectrum apply_TN(const BoundarySpectrum& spectrum, const ModeTable<double>& modes);

/// Sum over the square of coeffs_n exp(i alpha_n . r).
CVec3 evaluate_spectrum(const BoundarySpectrum& spectrum, const Incidence<double>& incidence,
                        const Lattice<double>& lattice, const Vec2& r);

/// Pointwise T_N u at horizontal position r from the trace spectrum.
CVec3 evaluate_TN(const BoundarySpectrum& spectrum, const ModeTable<double>& modes,
                  const Incidence<double>& incidence, const Lattice<double>& lattice, const Vec2& r);

/// Boundary coupling -Lambda1 Lambda2 B^H diag(M_n) B of the discrete form,
/// with B mapping free unknowns to stacked Fourier coefficients. B acts on
/// each displacement component identically through the node moments Wn.
class DtnBlock {
 public:
  enum class Representation { dense_block, low_rank };

  DtnBlock() = default;
  DtnBlock(const PeriodicTetMesh& mesh, const DofMap& dofs, const ModeTable<double>& modes,
           const Incidence<double>& incidence, int dense_threshold = 3000);

  Representation representation() const { return representation_; }
  int N() const { return N_; }
  int num_modes() const { return static_cast<int>(Wn_.rows()); }
  int rank() const { return 3 * num_modes(); }
  int num_boundary_dofs() const { return 3 * static_cast<int>(nodes_.size()); }
  /// Free node ids on the top boundary, column order of node_moments().
  const std::vector<int>& nodes() const { return nodes_; }
  const Eigen::MatrixXcd& node_moments() const { return Wn_; }
  double cell_area() const { return area_; }
  const ModeTable<double>& modes() const { return modes_; }

  /// Stacked coefficients B x (length rank()).
  Eigen::VectorXcd forward(const Eigen::VectorXcd& x) const;
  /// B^H y scattered into a free-length vector.
  Eigen::VectorXcd adjoint(const Eigen::VectorXcd& y) const;
  /// y -> G y with G = -Lambda1 Lambda2 blockdiag(M_n).
  Eigen::VectorXcd apply_weights(const Eigen::VectorXcd& y) const;
  /// The contribution C x = B^H G B x.
  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
  /// Materialized C restricted to the boundary unknowns (3 per node, node-major).
  Eigen::MatrixXcd dense() const;

 private:
  Representation representation_ = Representation::dense_block;
  int N_ = 0;
  int n_free_ = 0;
  double area_ = 1.0;
  std::vector<int> nodes_;
  Eigen::MatrixXcd Wn_;
  std::vector<CMat3> G_;
  ModeTable<double> modes_;
};

}  // namespace eldtn
