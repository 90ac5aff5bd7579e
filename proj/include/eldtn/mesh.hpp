#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "eldtn/common.hpp"

namespace eldtn {

/// Axis-aligned box standing on the flat base of a bump profile.
struct Bump {
  double x1lo, x1hi, x2lo, x2hi, height;
};

/// Lower boundary of the computational cell.
class SurfaceProfile {
 public:
  enum class Kind { flat, bumps, heightmap };

  static SurfaceProfile flat(double z0);
  static SurfaceProfile bumps(double z0, std::vector<Bump> boxes);
  /// Periodic node heights on an nx-by-ny grid over the period cell, row
  /// n1 major: heights[i * ny + j] sits at (i / nx, j / ny) in period units.
  /// The surface is affine on the triangles obtained by cutting each grid
  /// square along its (0,0)-(1,1) diagonal.
  static SurfaceProfile heightmap(int nx, int ny, std::vector<double> heights);

  Kind kind() const { return kind_; }
  double base() const { return z0_; }
  const std::vector<Bump>& boxes() const { return bumps_; }
  int grid_nx() const { return nx_; }
  int grid_ny() const { return ny_; }

  double max_height() const;
  /// Height of a flat or heightmap surface at period coordinates (s, t) in [0, 1]^2.
  double height_at(double s, double t) const;

  /// True when x lies on the boundary of the solid region below the surface.
  bool on_surface(const Vec3& x, double Lambda1, double Lambda2, double tol) const;

  /// Volume of the fluid region between the surface and z = h.
  double fluid_volume(double Lambda1, double Lambda2, double h) const;

 private:
  Kind kind_ = Kind::flat;
  double z0_ = 0.0;
  std::vector<Bump> bumps_;
  int nx_ = 0, ny_ = 0;
  std::vector<double> heights_;
};

struct Divisions {
  int n1 = 4, n2 = 4, n3 = 2;
};

enum class FaceTag { interior, surface, top, x1_lo, x1_hi, x2_lo, x2_hi };

const char* to_string(FaceTag tag);

/// Tetrahedron with the vertex order and refinement tag used by Maubach
/// bisection: the refinement edge joins v[0] and v[tag].
struct Tet {
  std::array<int, 4> v;
  int tag = 3;
  int generation = 0;
};

struct Face {
  std::array<int, 3> v;
  FaceTag tag = FaceTag::interior;
  std::array<int, 2> tets{-1, -1};
  std::array<int, 2> local{-1, -1};  // local face index = opposite vertex
  int partner = -1;                  // translated lateral face
};

class PeriodicTetMesh {
 public:
  double Lambda1 = 1.0;
  double Lambda2 = 1.0;
  double h = 1.0;
  SurfaceProfile profile = SurfaceProfile::flat(0.0);

  std::vector<Vec3> vertices;
  std::vector<Tet> tets;
  /// Endpoints of the edge each vertex bisected; {-1, -1} for initial vertices.
  std::vector<std::array<int, 2>> vertex_parents;

  // Filled by classify_faces.
  std::vector<Face> faces;
  std::vector<std::array<int, 4>> tet_faces;
  /// For a vertex on x1 = Lambda1, the vertex it translates to on x1 = 0
  /// (likewise for x2); -1 elsewhere.
  std::vector<int> x1_image, x2_image;
  std::vector<char> on_surface, on_top;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_tets() const { return static_cast<int>(tets.size()); }
  double length_scale() const { return std::max({Lambda1, Lambda2, h}); }

  double tet_volume(int t) const;
  double total_volume() const;
  double longest_edge(int t) const;
  double face_area(int f) const;
  Vec3 face_centroid(int f) const;
  /// Unit normal of face f pointing out of tet tets[side].
  Vec3 face_normal(int f, int side) const;
  /// Gradients of the four barycentric functions of tet t (rows).
  Eigen::Matrix<double, 4, 3> barycentric_gradients(int t) const;
};

PeriodicTetMesh build_mesh(const SurfaceProfile& profile, double Lambda1, double Lambda2,
                           double h, Divisions divisions);

/// Bisects every marked tet, then its children, `bisections` levels deep and
/// closes the mesh conformingly; paired lateral faces are refined
/// identically. Three bisections split every edge of a Kuhn tet.
PeriodicTetMesh refine(const PeriodicTetMesh& mesh, const std::vector<int>& marked, int bisections = 1);

/// Rebuilds faces, tags, lateral pairing and vertex images. Throws MeshError
/// when a lateral face or vertex has no translated partner.
void classify_faces(PeriodicTetMesh& mesh);

struct AuditResult {
  bool ok = true;
  std::string message;
};

AuditResult audit_conformity(const PeriodicTetMesh& mesh);
AuditResult audit_periodicity(const PeriodicTetMesh& mesh, double tol = 1e-12);
AuditResult audit_volume(const PeriodicTetMesh& mesh, double rel_tol = 1e-12);
double min_dihedral_angle(const PeriodicTetMesh& mesh);

/// Hash of points quantized on a fine grid, for matching coordinates that
/// agree up to round-off.
class PointIndex {
 public:
  explicit PointIndex(double tol) : tol_(tol) {}
  void insert(const Vec3& x, int id);
  int find(const Vec3& x) const;  // -1 when absent

 private:
  std::array<std::int64_t, 3> cell(const Vec3& x) const;
  static std::uint64_t hash(const std::array<std::int64_t, 3>& c);
  double tol_;
  std::unordered_map<std::uint64_t, std::vector<std::pair<Vec3, int>>> buckets_;
};

}  // namespace eldtn
