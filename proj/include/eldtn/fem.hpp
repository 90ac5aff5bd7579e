#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "eldtn/mesh.hpp"
#include "eldtn/spectral.hpp"

namespace eldtn {

using SparseMatrixC = Eigen::SparseMatrix<Complex>;
using ElementMatrix = Eigen::Matrix<double, 12, 12>;

/// Vector P1 degrees of freedom with the quasi-periodic identification.
///
/// Each vertex either carries three free unknowns (a "node"), is a slave of
/// a node on the low lateral sides with u(v) = phase[v] * u(master[v]), or
/// is a Dirichlet vertex on the surface. Unknown (node k, component c) has
/// index 3k + c.
struct DofMap {
  int n_free = 0;
  int n_nodes = 0;
  std::vector<int> node;
  std::vector<int> master;
  std::vector<Complex> phase;
  std::vector<char> dirichlet;
  Complex phase_x1{1.0, 0.0};
  Complex phase_x2{1.0, 0.0};

  int dof(int v, int c) const { return node[v] < 0 ? -1 : 3 * node[v] + c; }
};

DofMap build_dofmap(const PeriodicTetMesh& mesh, const Incidence<double>& incidence);

/// Nodal interpolation of -u_inc at surface vertices; zero elsewhere.
std::vector<CVec3> dirichlet_lift(const PeriodicTetMesh& mesh, const DofMap& dofs,
                                  const Medium<double>& medium, const Incidence<double>& incidence);

/// A discrete displacement: free coefficients plus the nodal values they
/// induce at every mesh vertex (slaves and Dirichlet vertices included).
struct Field {
  Eigen::VectorXcd coefficients;
  std::vector<CVec3> nodal;
};

Field make_field(const DofMap& dofs, const Eigen::VectorXcd& coefficients,
                 const std::vector<CVec3>& lift);

/// Gradient G(i, j) = d u_i / d x_j of the P1 field on tet t.
CMat3 element_gradient(const PeriodicTetMesh& mesh, const Field& field, int t);

/// Element matrix of mu grad u : grad v + (lambda+mu) div u div v
/// - omega^2 u . v on one tet; local index 3 * vertex + component.
ElementMatrix element_matrix(const Eigen::Matrix<double, 4, 3>& grads, double volume,
                             const Medium<double>& medium);

struct VolumeSystem {
  SparseMatrixC A;
  Eigen::VectorXcd rhs;
};

VolumeSystem assemble_volume(const PeriodicTetMesh& mesh, const DofMap& dofs,
                             const Medium<double>& medium, const std::vector<CVec3>& lift);

/// L2 norm of the gradient of (exact - u_h) with the degree-2 tet rule.
double h1_error(const PeriodicTetMesh& mesh, const Field& field,
                const std::function<CMat3(const Vec3&)>& exact_gradient);

/// L2(K) norm of the P1 field on tet t, from the exact P1 mass matrix.
double element_l2_norm(const PeriodicTetMesh& mesh, const Field& field, int t);

}  // namespace eldtn
