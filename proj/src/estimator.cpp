#include "eldtn/estimator.hpp"

#include <cmath>

#include "eldtn/analytic.hpp"
#include "eldtn/quadrature.hpp"

namespace eldtn {

namespace {

double face_size(const PeriodicTetMesh& mesh, int f) {
  const auto& v = mesh.faces[f].v;
  double m = 0.0;
  for (int i = 0; i < 3; ++i) m = std::max(m, (mesh.vertices[v[i]] - mesh.vertices[v[(i + 1) % 3]]).norm());
  return m;
}

bool is_lateral_lo(FaceTag t) { return t == FaceTag::x1_lo || t == FaceTag::x2_lo; }
bool is_lateral_hi(FaceTag t) { return t == FaceTag::x1_hi || t == FaceTag::x2_hi; }

}  // namespace

double element_residual(const PeriodicTetMesh& mesh, const Field& field, int tet, const Medium<double>& medium) {
  // mu Lap u + (lambda + mu) grad div u is identically zero inside a P1 element.
  return medium.omega * medium.omega * element_l2_norm(mesh, field, tet);
}

double element_size(const PeriodicTetMesh& mesh, int tet) { return mesh.longest_edge(tet); }

CVec3 conormal_flux(const CMat3& G, const Vec3& n, const Medium<double>& medium) {
  const CVec3 nc = n.cast<Complex>();
  return medium.mu * (G * nc) + (medium.lambda + medium.mu) * G.trace() * nc;
}

double interior_jump(const PeriodicTetMesh& mesh, const Field& field, int face, const Medium<double>& medium) {
  const Face& f = mesh.faces.at(face);
  if (f.tag != FaceTag::interior || f.tets[1] < 0)
    throw InvalidParameter("interior_jump: face " + std::to_string(face) + " is a boundary face");
  const CVec3 j = conormal_flux(element_gradient(mesh, field, f.tets[0]), mesh.face_normal(face, 0), medium) +
                  conormal_flux(element_gradient(mesh, field, f.tets[1]), mesh.face_normal(face, 1), medium);
  return std::sqrt(mesh.face_area(face)) * j.norm();
}

int top_quadrature_points(const PeriodicTetMesh& mesh, int face, const ModeTable<double>& modes) {
  double kmax = 0.0;
  const int N = modes.N();
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1}) kmax = std::max(kmax, modes.at({s1 * N, s2 * N}).alpha_norm());
  const int n = 4 + 2 * static_cast<int>(std::ceil(kmax * face_size(mesh, face)));
  return std::min(n, 40);
}

double top_jump(const PeriodicTetMesh& mesh, const Field& field, int face, const BoundarySpectrum& applied,
                const Medium<double>& medium, const Incidence<double>& incidence,
                const Lattice<double>& lattice, int points) {
  const Face& f = mesh.faces.at(face);
  if (f.tag != FaceTag::top) throw InvalidParameter("top_jump: face " + std::to_string(face) + " is not on the top");
  const CVec3 Du = conormal_x3<double>(element_gradient(mesh, field, f.tets[0]), medium);
  const Vec3& a = mesh.vertices[f.v[0]];
  const Vec3 e1 = mesh.vertices[f.v[1]] - a, e2 = mesh.vertices[f.v[2]] - a;
  const double jac = 2.0 * mesh.face_area(face);
  const TriangleRule rule = collapsed_triangle_rule(points);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.w.size(); ++q) {
    const Vec3 x = a + rule.x[q](0) * e1 + rule.x[q](1) * e2;
    const CVec3 Tu = evaluate_spectrum(applied, incidence, lattice, x.head<2>());
    sum += rule.w[q] * jac * (2.0 * (Tu - Du)).squaredNorm();
  }
  return std::sqrt(sum);
}

std::pair<double, double> lateral_jump(const PeriodicTetMesh& mesh, const Field& field, int face,
                                       const Medium<double>& medium, const Incidence<double>& incidence) {
  const Face& f = mesh.faces.at(face);
  if (!is_lateral_lo(f.tag) || f.partner < 0)
    throw InvalidParameter("lateral_jump: face " + std::to_string(face) + " is not a paired lo-side lateral face");
  const Face& g = mesh.faces[f.partner];
  const bool x1 = f.tag == FaceTag::x1_lo;
  if (g.tag != (x1 ? FaceTag::x1_hi : FaceTag::x2_hi) || g.partner != face)
    throw InvalidParameter("lateral_jump: face " + std::to_string(face) + " has a mismatched partner");
  const Vec3 e = x1 ? Vec3::UnitX() : Vec3::UnitY();
  const double shift = x1 ? incidence.alpha(0) * mesh.Lambda1 : incidence.alpha(1) * mesh.Lambda2;
  const Complex phase = std::exp(Complex(0, shift));
  const CVec3 t1 = conormal_flux(element_gradient(mesh, field, f.tets[0]), e, medium);
  const CVec3 t2 = conormal_flux(element_gradient(mesh, field, g.tets[0]), e, medium);
  const double jF = std::sqrt(mesh.face_area(face)) * (t1 - std::conj(phase) * t2).norm();
  const double jG = std::sqrt(mesh.face_area(f.partner)) * (phase * t1 - t2).norm();
  return {jF, jG};
}

Indicators indicators(const PeriodicTetMesh& mesh, const Field& field, const ModeTable<double>& modes,
                      const Medium<double>& medium, const Incidence<double>& incidence,
                      const Lattice<double>& lattice, double uinc_h1norm, const EstimatorOptions& options,
                      const BoundarySpectrum* trace) {
  Indicators ind;
  const int nt = mesh.num_tets();
  const int nf = static_cast<int>(mesh.faces.size());
  ind.residual.resize(nt);
  for (int t = 0; t < nt; ++t) ind.residual[t] = options.residual_scale * element_residual(mesh, field, t, medium);

  const BoundarySpectrum applied =
      apply_TN(trace ? *trace : fourier_trace(mesh, incidence, field.nodal, modes.N()), modes);
  ind.face_jump.assign(nf, 0.0);
  for (int f = 0; f < nf; ++f) {
    const FaceTag tag = mesh.faces[f].tag;
    if (tag == FaceTag::interior) {
      ind.face_jump[f] = interior_jump(mesh, field, f, medium);
    } else if (tag == FaceTag::top) {
      const int p = options.top_quadrature_points > 0 ? options.top_quadrature_points
                                                      : top_quadrature_points(mesh, f, modes);
      ind.face_jump[f] = top_jump(mesh, field, f, applied, medium, incidence, lattice, p);
    } else if (is_lateral_lo(tag)) {
      const auto [jF, jG] = lateral_jump(mesh, field, f, medium, incidence);
      ind.face_jump[f] = jF;
      ind.face_jump[mesh.faces[f].partner] = jG;
    }
  }

  ind.eta.resize(nt);
  long double total = 0.0;
  for (int t = 0; t < nt; ++t) {
    const double hK = element_size(mesh, t);
    double faces = 0.0;
    for (int f : mesh.tet_faces[t]) {
      const FaceTag tag = mesh.faces[f].tag;
      double w = 0.0;
      if (tag == FaceTag::interior) w = options.interior_weight;
      else if (tag == FaceTag::top) w = options.top_weight;
      else if (is_lateral_lo(tag) || is_lateral_hi(tag)) w = options.lateral_weight;
      faces += w * ind.face_jump[f] * ind.face_jump[f];
    }
    const double eta2 = hK * hK * ind.residual[t] * ind.residual[t] + hK * faces;
    ind.eta[t] = std::sqrt(eta2);
    total += eta2;
  }
  ind.eps_h = std::sqrt(static_cast<double>(total));
  ind.eps_N = truncation_bound(medium, incidence, lattice, modes.N(), uinc_h1norm);
  return ind;
}

double face_sweep_total(const PeriodicTetMesh& mesh, const Indicators& ind, const EstimatorOptions& options) {
  long double total = 0.0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const double hK = element_size(mesh, t);
    total += hK * hK * ind.residual[t] * ind.residual[t];
  }
  for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
    const Face& face = mesh.faces[f];
    if (face.tag == FaceTag::interior) {
      const double j2 = ind.face_jump[f] * ind.face_jump[f];
      total += options.interior_weight * j2 *
               (element_size(mesh, face.tets[0]) + element_size(mesh, face.tets[1]));
    } else if (face.tag == FaceTag::top) {
      total += options.top_weight * element_size(mesh, face.tets[0]) * ind.face_jump[f] * ind.face_jump[f];
    } else if (is_lateral_lo(face.tag)) {
      const int g = face.partner;
      total += options.lateral_weight *
               (element_size(mesh, face.tets[0]) * ind.face_jump[f] * ind.face_jump[f] +
                element_size(mesh, mesh.faces[g].tets[0]) * ind.face_jump[g] * ind.face_jump[g]);
    }
  }
  return static_cast<double>(total);
}

}  // namespace eldtn
