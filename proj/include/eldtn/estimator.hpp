#pragma once

#include <utility>
#include <vector>

#include "eldtn/dtn.hpp"
#include "eldtn/fem.hpp"
#include "eldtn/mesh.hpp"
#include "eldtn/spectral.hpp"

namespace eldtn {

struct EstimatorOptions {
  // Share of a face's jump energy charged to each owning element.
  double interior_weight = 0.5;
  double lateral_weight = 0.5;
  double top_weight = 0.25;
  // Multiplies the element residual only; a diagnostic hook, 1 in normal use.
  double residual_scale = 1.0;
  // Points per direction of the top-face rule; <= 0 picks it from the
  // largest mode wavenumber and the face size.
  int top_quadrature_points = 0;
};

struct Indicators {
  std::vector<double> eta;        // per tet
  double eps_h = 0.0;
  double eps_N = 0.0;
  std::vector<double> face_jump;  // ||J_F|| per face, 0 on surface faces
  std::vector<double> residual;   // ||R_K u_h|| per tet
};

/// ||R_K u_h||_{L2(K)}. The second-derivative terms vanish for P1 fields,
/// leaving omega^2 ||u_h||.
double element_residual(const PeriodicTetMesh& mesh, const Field& field, int tet, const Medium<double>& medium);

/// Co-normal flux mu G n + (lambda + mu) tr(G) n for a constant gradient G.
CVec3 conormal_flux(const CMat3& G, const Vec3& n, const Medium<double>& medium);

double interior_jump(const PeriodicTetMesh& mesh, const Field& field, int face, const Medium<double>& medium);

/// Number of collapsed-rule points per direction used on a top face.
int top_quadrature_points(const PeriodicTetMesh& mesh, int face, const ModeTable<double>& modes);

/// ||2 (T_N u_h - D u_h)||_{L2(F)} on a top face. `applied` holds the
/// coefficients M_n u_n of T_N u_h.
double top_jump(const PeriodicTetMesh& mesh, const Field& field, int face, const BoundarySpectrum& applied,
                const Medium<double>& medium, const Incidence<double>& incidence,
                const Lattice<double>& lattice, int points);

/// Jump norms on a lo-side lateral face F and its partner F'.
std::pair<double, double> lateral_jump(const PeriodicTetMesh& mesh, const Field& field, int face,
                                       const Medium<double>& medium, const Incidence<double>& incidence);

/// Longest edge of the tet.
double element_size(const PeriodicTetMesh& mesh, int tet);

/// All indicators. The trace spectrum is computed from the field unless given.
Indicators indicators(const PeriodicTetMesh& mesh, const Field& field, const ModeTable<double>& modes,
                      const Medium<double>& medium, const Incidence<double>& incidence,
                      const Lattice<double>& lattice, double uinc_h1norm, const EstimatorOptions& options = {},
                      const BoundarySpectrum* trace = nullptr);

/// Sum of eta_K^2 assembled face by face (each face visited once) from the
/// face jumps and element residuals stored in `ind`. Used to audit the
/// per-element accumulation.
double face_sweep_total(const PeriodicTetMesh& mesh, const Indicators& ind, const EstimatorOptions& options = {});

}  // namespace eldtn
