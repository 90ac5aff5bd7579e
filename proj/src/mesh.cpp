#include "eldtn/mesh.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <tuple>

#include <Eigen/Dense>

namespace eldtn {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

constexpr std::array<std::array<int, 2>, 6> kTetEdges{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

constexpr std::array<std::array<int, 3>, 6> kPermutations{
    {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

bool near_integer(double x, double tol = 1e-9) { return std::abs(x - std::round(x)) < tol; }

}  // namespace

// ---------------------------------------------------------------- profile

SurfaceProfile SurfaceProfile::flat(double z0) {
  SurfaceProfile p;
  p.kind_ = Kind::flat;
  p.z0_ = z0;
  return p;
}

SurfaceProfile SurfaceProfile::bumps(double z0, std::vector<Bump> boxes) {
  for (const Bump& b : boxes)
    if (!(b.x1lo < b.x1hi) || !(b.x2lo < b.x2hi) || !(b.height > 0))
      throw InvalidParameter("bump boxes need lo < hi and positive height");
  SurfaceProfile p;
  p.kind_ = Kind::bumps;
  p.z0_ = z0;
  p.bumps_ = std::move(boxes);
  return p;
}

SurfaceProfile SurfaceProfile::heightmap(int nx, int ny, std::vector<double> heights) {
  if (nx < 1 || ny < 1 || heights.size() != std::size_t(nx) * ny)
    throw InvalidParameter("heightmap needs nx * ny node heights");
  SurfaceProfile p;
  p.kind_ = Kind::heightmap;
  p.nx_ = nx;
  p.ny_ = ny;
  p.heights_ = std::move(heights);
  p.z0_ = *std::min_element(p.heights_.begin(), p.heights_.end());
  return p;
}

double SurfaceProfile::max_height() const {
  switch (kind_) {
    case Kind::flat:
      return z0_;
    case Kind::bumps: {
      double m = z0_;
      for (const Bump& b : bumps_) m = std::max(m, z0_ + b.height);
      return m;
    }
    case Kind::heightmap:
      return *std::max_element(heights_.begin(), heights_.end());
  }
  return z0_;
}

double SurfaceProfile::height_at(double s, double t) const {
  if (kind_ != Kind::heightmap) return z0_;
  const double gs = s * nx_, gt = t * ny_;
  const int I = static_cast<int>(std::floor(gs)), J = static_cast<int>(std::floor(gt));
  const double a = gs - I, b = gt - J;
  auto f = [&](int i, int j) {
    i = ((i % nx_) + nx_) % nx_;
    j = ((j % ny_) + ny_) % ny_;
    return heights_[std::size_t(i) * ny_ + j];
  };
  const double f00 = f(I, J), f10 = f(I + 1, J), f01 = f(I, J + 1), f11 = f(I + 1, J + 1);
  if (a >= b) return f00 + a * (f10 - f00) + b * (f11 - f10);
  return f00 + b * (f01 - f00) + a * (f11 - f01);
}

bool SurfaceProfile::on_surface(const Vec3& x, double Lambda1, double Lambda2, double tol) const {
  if (kind_ != Kind::bumps) return std::abs(x(2) - height_at(x(0) / Lambda1, x(1) / Lambda2)) <= tol;
  auto inside = [&](double v, double lo, double hi, bool closed) {
    return closed ? (v >= lo - tol && v <= hi + tol) : (v > lo + tol && v < hi - tol);
  };
  bool under_bump = false;
  for (const Bump& b : bumps_) {
    const double top = z0_ + b.height;
    const bool in1 = inside(x(0), b.x1lo, b.x1hi, true), in2 = inside(x(1), b.x2lo, b.x2hi, true);
    if (in1 && in2 && std::abs(x(2) - top) <= tol) return true;
    const bool wall1 = (std::abs(x(0) - b.x1lo) <= tol || std::abs(x(0) - b.x1hi) <= tol) && in2;
    const bool wall2 = (std::abs(x(1) - b.x2lo) <= tol || std::abs(x(1) - b.x2hi) <= tol) && in1;
    if ((wall1 || wall2) && x(2) >= z0_ - tol && x(2) <= top + tol) return true;
    if (inside(x(0), b.x1lo, b.x1hi, false) && inside(x(1), b.x2lo, b.x2hi, false)) under_bump = true;
  }
  return std::abs(x(2) - z0_) <= tol && !under_bump;
}

double SurfaceProfile::fluid_volume(double Lambda1, double Lambda2, double h) const {
  const double area = Lambda1 * Lambda2;
  switch (kind_) {
    case Kind::flat:
      return area * (h - z0_);
    case Kind::bumps: {
      double v = area * (h - z0_);
      for (const Bump& b : bumps_) v -= (b.x1hi - b.x1lo) * (b.x2hi - b.x2lo) * b.height;
      return v;
    }
    case Kind::heightmap: {
      double integral = 0.0;
      for (int i = 0; i < nx_; ++i)
        for (int j = 0; j < ny_; ++j) {
          auto f = [&](int a, int b) { return heights_[std::size_t((i + a) % nx_) * ny_ + (j + b) % ny_]; };
          integral += (2 * f(0, 0) + f(1, 0) + f(0, 1) + 2 * f(1, 1)) / 6.0;
        }
      return area * h - integral * area / (nx_ * ny_);
    }
  }
  return 0.0;
}

const char* to_string(FaceTag tag) {
  switch (tag) {
    case FaceTag::interior: return "interior";
    case FaceTag::surface: return "S";
    case FaceTag::top: return "Gamma_h";
    case FaceTag::x1_lo: return "lateral_x1_lo";
    case FaceTag::x1_hi: return "lateral_x1_hi";
    case FaceTag::x2_lo: return "lateral_x2_lo";
    case FaceTag::x2_hi: return "lateral_x2_hi";
  }
  return "?";
}

// ------------------------------------------------------------ point index

std::array<std::int64_t, 3> PointIndex::cell(const Vec3& x) const {
  const double size = 2.0 * tol_;
  return {std::int64_t(std::floor(x(0) / size)), std::int64_t(std::floor(x(1) / size)),
          std::int64_t(std::floor(x(2) / size))};
}

std::uint64_t PointIndex::hash(const std::array<std::int64_t, 3>& c) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::int64_t v : c) {
    h ^= std::uint64_t(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 1099511628211ull;
  }
  return h;
}

void PointIndex::insert(const Vec3& x, int id) { buckets_[hash(cell(x))].emplace_back(x, id); }

int PointIndex::find(const Vec3& x) const {
  const auto c = cell(x);
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dz = -1; dz <= 1; ++dz) {
        const auto it = buckets_.find(hash({c[0] + dx, c[1] + dy, c[2] + dz}));
        if (it == buckets_.end()) continue;
        for (const auto& [p, id] : it->second)
          if ((p - x).cwiseAbs().maxCoeff() <= tol_) return id;
      }
  return -1;
}

// --------------------------------------------------------- mesh geometry

double PeriodicTetMesh::tet_volume(int t) const {
  const auto& v = tets[t].v;
  const Vec3 a = vertices[v[1]] - vertices[v[0]];
  const Vec3 b = vertices[v[2]] - vertices[v[0]];
  const Vec3 c = vertices[v[3]] - vertices[v[0]];
  return std::abs(a.dot(b.cross(c))) / 6.0;
}

double PeriodicTetMesh::total_volume() const {
  double s = 0.0;
  for (int t = 0; t < num_tets(); ++t) s += tet_volume(t);
  return s;
}

double PeriodicTetMesh::longest_edge(int t) const {
  double m = 0.0;
  for (const auto& e : kTetEdges)
    m = std::max(m, (vertices[tets[t].v[e[0]]] - vertices[tets[t].v[e[1]]]).norm());
  return m;
}

double PeriodicTetMesh::face_area(int f) const {
  const auto& v = faces[f].v;
  return 0.5 * (vertices[v[1]] - vertices[v[0]]).cross(vertices[v[2]] - vertices[v[0]]).norm();
}

Vec3 PeriodicTetMesh::face_centroid(int f) const {
  const auto& v = faces[f].v;
  return (vertices[v[0]] + vertices[v[1]] + vertices[v[2]]) / 3.0;
}

Vec3 PeriodicTetMesh::face_normal(int f, int side) const {
  const Face& face = faces[f];
  const auto& v = face.v;
  Vec3 n = (vertices[v[1]] - vertices[v[0]]).cross(vertices[v[2]] - vertices[v[0]]).normalized();
  const int t = face.tets[side];
  const int opposite = tets[t].v[face.local[side]];
  if (n.dot(vertices[opposite] - vertices[v[0]]) > 0) n = -n;
  return n;
}

Eigen::Matrix<double, 4, 3> PeriodicTetMesh::barycentric_gradients(int t) const {
  const auto& v = tets[t].v;
  Eigen::Matrix3d J;
  for (int i = 0; i < 3; ++i) J.col(i) = vertices[v[i + 1]] - vertices[v[0]];
  const double det = J.determinant();
  if (std::abs(det) <= 1e-14 * std::pow(J.norm(), 3))
    throw MeshError("degenerate tetrahedron " + std::to_string(t));
  const Eigen::Matrix3d Jinv = J.inverse();
  Eigen::Matrix<double, 4, 3> G;
  G.bottomRows<3>() = Jinv;
  G.row(0) = -Jinv.colwise().sum();
  return G;
}

// ----------------------------------------------------------- construction

PeriodicTetMesh build_mesh(const SurfaceProfile& profile, double Lambda1, double Lambda2,
                           double h, Divisions div) {
  if (div.n1 < 1 || div.n2 < 1 || div.n3 < 1)
    throw InvalidParameter("initial divisions must be at least 1 per axis");
  if (!(Lambda1 > 0) || !(Lambda2 > 0)) throw InvalidParameter("periods must be positive");
  if (!(profile.max_height() < h))
    throw MeshError("surface profile reaches the artificial boundary: max f >= h");

  PeriodicTetMesh mesh;
  mesh.Lambda1 = Lambda1;
  mesh.Lambda2 = Lambda2;
  mesh.h = h;
  mesh.profile = profile;

  const int n1 = div.n1, n2 = div.n2, n3 = div.n3;
  const double z0 = profile.base();

  // Cells removed by bumps.
  std::vector<char> solid(std::size_t(n1) * n2 * n3, 0);
  if (profile.kind() == SurfaceProfile::Kind::bumps) {
    const double dz = (h - z0) / n3;
    for (const Bump& b : profile.boxes()) {
      const double i0 = b.x1lo / Lambda1 * n1, i1 = b.x1hi / Lambda1 * n1;
      const double j0 = b.x2lo / Lambda2 * n2, j1 = b.x2hi / Lambda2 * n2;
      const double k1 = b.height / dz;
      if (!near_integer(i0) || !near_integer(i1) || !near_integer(j0) || !near_integer(j1) ||
          !near_integer(k1)) {
        std::ostringstream msg;
        msg << "bump [" << b.x1lo << ", " << b.x1hi << "] x [" << b.x2lo << ", " << b.x2hi
            << "] x height " << b.height << " is not aligned with the " << n1 << "x" << n2 << "x"
            << n3 << " grid";
        throw MeshError(msg.str());
      }
      if (b.x1lo < -1e-12 || b.x1hi > Lambda1 + 1e-12 || b.x2lo < -1e-12 || b.x2hi > Lambda2 + 1e-12)
        throw MeshError("bump footprint leaves the period cell");
      for (int i = int(std::lround(i0)); i < int(std::lround(i1)); ++i)
        for (int j = int(std::lround(j0)); j < int(std::lround(j1)); ++j)
          for (int k = 0; k < int(std::lround(k1)); ++k) solid[(std::size_t(i) * n2 + j) * n3 + k] = 1;
    }
  }
  if (profile.kind() == SurfaceProfile::Kind::heightmap &&
      (n1 % profile.grid_nx() != 0 || n2 % profile.grid_ny() != 0))
    throw MeshError("heightmap resolution must divide the initial divisions");

  auto grid_id = [&](int i, int j, int k) { return (i * (n2 + 1) + j) * (n3 + 1) + k; };
  std::vector<int> remap(std::size_t(n1 + 1) * (n2 + 1) * (n3 + 1), -1);

  auto coordinate = [&](int i, int j, int k) {
    const double x = i == n1 ? Lambda1 : Lambda1 * i / n1;
    const double y = j == n2 ? Lambda2 : Lambda2 * j / n2;
    double f = z0;
    if (profile.kind() == SurfaceProfile::Kind::heightmap)
      f = profile.height_at(double(i % n1) / n1, double(j % n2) / n2);
    const double z = k == n3 ? h : f + (h - f) * k / n3;
    return Vec3(x, y, z);
  };

  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j)
      for (int k = 0; k < n3; ++k) {
        if (solid[(std::size_t(i) * n2 + j) * n3 + k]) continue;
        for (const auto& perm : kPermutations) {
          std::array<int, 3> c{i, j, k};
          Tet t;
          auto add = [&](int slot) {
            const int g = grid_id(c[0], c[1], c[2]);
            if (remap[g] < 0) {
              remap[g] = mesh.num_vertices();
              mesh.vertices.push_back(coordinate(c[0], c[1], c[2]));
            }
            t.v[slot] = remap[g];
          };
          add(0);
          for (int s = 0; s < 3; ++s) {
            ++c[perm[s]];
            add(s + 1);
          }
          t.tag = 3;
          t.generation = 0;
          mesh.tets.push_back(t);
        }
      }
  mesh.vertex_parents.assign(mesh.vertices.size(), {-1, -1});
  classify_faces(mesh);
  return mesh;
}

// ------------------------------------------------------ classification

void classify_faces(PeriodicTetMesh& mesh) {
  const int nt = mesh.num_tets();
  const double tol = 1e-10 * mesh.length_scale();

  struct Entry {
    std::array<int, 3> key;
    int tet;
    int local;
  };
  std::vector<Entry> entries;
  entries.reserve(std::size_t(nt) * 4);
  for (int t = 0; t < nt; ++t)
    for (int l = 0; l < 4; ++l) {
      std::array<int, 3> k;
      int m = 0;
      for (int i = 0; i < 4; ++i)
        if (i != l) k[m++] = mesh.tets[t].v[i];
      std::sort(k.begin(), k.end());
      entries.push_back({k, t, l});
    }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.key, a.tet) < std::tie(b.key, b.tet);
  });

  mesh.faces.clear();
  mesh.tet_faces.assign(nt, {-1, -1, -1, -1});
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    while (j < entries.size() && entries[j].key == entries[i].key) ++j;
    if (j - i > 2) throw MeshError("non-manifold mesh: a face is shared by more than two tets");
    Face f;
    f.v = entries[i].key;
    for (std::size_t s = i; s < j; ++s) {
      f.tets[s - i] = entries[s].tet;
      f.local[s - i] = entries[s].local;
      mesh.tet_faces[entries[s].tet][entries[s].local] = static_cast<int>(mesh.faces.size());
    }
    mesh.faces.push_back(f);
    i = j;
  }

  const double L1 = mesh.Lambda1, L2 = mesh.Lambda2;
  auto all = [&](const Face& f, auto pred) {
    return pred(mesh.vertices[f.v[0]]) && pred(mesh.vertices[f.v[1]]) && pred(mesh.vertices[f.v[2]]);
  };
  const int nv = mesh.num_vertices();
  mesh.on_surface.assign(nv, 0);
  mesh.on_top.assign(nv, 0);
  for (Face& f : mesh.faces) {
    if (f.tets[1] >= 0) {
      f.tag = FaceTag::interior;
    } else if (all(f, [&](const Vec3& x) { return std::abs(x(2) - mesh.h) <= tol; })) {
      f.tag = FaceTag::top;
    } else if (all(f, [&](const Vec3& x) { return std::abs(x(0)) <= tol; })) {
      f.tag = FaceTag::x1_lo;
    } else if (all(f, [&](const Vec3& x) { return std::abs(x(0) - L1) <= tol; })) {
      f.tag = FaceTag::x1_hi;
    } else if (all(f, [&](const Vec3& x) { return std::abs(x(1)) <= tol; })) {
      f.tag = FaceTag::x2_lo;
    } else if (all(f, [&](const Vec3& x) { return std::abs(x(1) - L2) <= tol; })) {
      f.tag = FaceTag::x2_hi;
    } else {
      f.tag = FaceTag::surface;
    }
    if (f.tag == FaceTag::surface)
      for (int v : f.v) mesh.on_surface[v] = 1;
    if (f.tag == FaceTag::top)
      for (int v : f.v) mesh.on_top[v] = 1;
  }

  // Lateral pairing by translated centroids.
  std::vector<int> hi_faces;
  PointIndex centroids(tol);
  for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
    const FaceTag tag = mesh.faces[f].tag;
    if (tag == FaceTag::x1_hi || tag == FaceTag::x2_hi) centroids.insert(mesh.face_centroid(f), f);
  }
  int paired = 0, hi_count = 0;
  for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
    Face& face = mesh.faces[f];
    if (face.tag == FaceTag::x1_hi || face.tag == FaceTag::x2_hi) ++hi_count;
    if (face.tag != FaceTag::x1_lo && face.tag != FaceTag::x2_lo) continue;
    const Vec3 shift = face.tag == FaceTag::x1_lo ? Vec3(L1, 0, 0) : Vec3(0, L2, 0);
    const int g = centroids.find(mesh.face_centroid(f) + shift);
    const FaceTag want = face.tag == FaceTag::x1_lo ? FaceTag::x1_hi : FaceTag::x2_hi;
    if (g < 0 || mesh.faces[g].tag != want) {
      std::ostringstream msg;
      const Vec3 c = mesh.face_centroid(f);
      msg << "unmatched lateral face " << to_string(face.tag) << " with centroid (" << c(0) << ", "
          << c(1) << ", " << c(2) << "): mesh is not periodic";
      throw MeshError(msg.str());
    }
    face.partner = g;
    mesh.faces[g].partner = f;
    ++paired;
  }
  if (paired != hi_count) throw MeshError("unmatched lateral face on a high side: mesh is not periodic");

  PointIndex points(tol);
  for (int v = 0; v < nv; ++v) points.insert(mesh.vertices[v], v);
  mesh.x1_image.assign(nv, -1);
  mesh.x2_image.assign(nv, -1);
  for (int v = 0; v < nv; ++v) {
    const Vec3& x = mesh.vertices[v];
    if (std::abs(x(0) - L1) <= tol) {
      mesh.x1_image[v] = points.find(x - Vec3(L1, 0, 0));
      if (mesh.x1_image[v] < 0) throw MeshError("vertex on x1 = Lambda1 without periodic image");
    }
    if (std::abs(x(1) - L2) <= tol) {
      mesh.x2_image[v] = points.find(x - Vec3(0, L2, 0));
      if (mesh.x2_image[v] < 0) throw MeshError("vertex on x2 = Lambda2 without periodic image");
    }
  }
}

// ------------------------------------------------------------ refinement

namespace {

class Bisector {
 public:
  explicit Bisector(PeriodicTetMesh& mesh)
      : mesh_(mesh), tol_(1e-10 * mesh.length_scale()), points_(tol_) {
    for (int v = 0; v < mesh.num_vertices(); ++v) points_.insert(mesh.vertices[v], v);
    for (int t = 0; t < mesh.num_tets(); ++t) attach(t);
  }

  // Bisects each marked tet, and afterwards its descendants, until they are
  // `bisections` generations deeper than the marked tet was.
  void run(const std::vector<int>& marked, int bisections) {
    target_.assign(mesh_.num_tets(), -1);
    for (int t : marked) {
      if (t < 0 || t >= static_cast<int>(target_.size()))
        throw InvalidParameter("refine: marked tet id out of range");
      target_[t] = mesh_.tets[t].generation + bisections;
    }
    const std::size_t budget = 64 * bisections * (mesh_.tets.size() + marked.size()) + 1024;
    for (;;) {
      std::vector<int> shallow;
      for (int t = 0; t < mesh_.num_tets(); ++t)
        if (mesh_.tets[t].generation < target_[t]) shallow.push_back(t);
      if (shallow.empty()) return;
      std::vector<int> start_generation(mesh_.num_tets());
      for (int t = 0; t < mesh_.num_tets(); ++t) start_generation[t] = mesh_.tets[t].generation;
      for (int t : shallow) {
        if (mesh_.tets[t].generation != start_generation[t]) continue;  // already split by closure
        bisect(t);
        while (!pending_.empty()) {
          const int s = pending_.back();
          pending_.pop_back();
          if (has_split_edge(s)) bisect(s);
          if (++work_ > budget) throw MeshError("refinement closure did not terminate");
        }
      }
    }
  }

 private:
  void attach(int t) {
    for (const auto& e : kTetEdges) edge_tets_[edge_key(mesh_.tets[t].v[e[0]], mesh_.tets[t].v[e[1]])].push_back(t);
  }
  void detach(int t) {
    for (const auto& e : kTetEdges) {
      auto& list = edge_tets_[edge_key(mesh_.tets[t].v[e[0]], mesh_.tets[t].v[e[1]])];
      list.erase(std::find(list.begin(), list.end(), t));
    }
  }

  bool has_split_edge(int t) const {
    for (const auto& e : kTetEdges)
      if (split_.count(edge_key(mesh_.tets[t].v[e[0]], mesh_.tets[t].v[e[1]]))) return true;
    return false;
  }

  // Registers the midpoint of edge (a, b), queues every tet containing the
  // edge, and splits the translated partner edges on lateral planes.
  int split_edge(int a, int b) {
    const std::uint64_t key = edge_key(a, b);
    if (auto it = split_.find(key); it != split_.end()) return it->second;
    const Vec3 mid = 0.5 * (mesh_.vertices[a] + mesh_.vertices[b]);
    int m = points_.find(mid);
    if (m < 0) {
      m = mesh_.num_vertices();
      mesh_.vertices.push_back(mid);
      mesh_.vertex_parents.push_back({a, b});
      points_.insert(mid, m);
    }
    split_[key] = m;
    if (auto it = edge_tets_.find(key); it != edge_tets_.end())
      for (int t : it->second) pending_.push_back(t);

    const Vec3 &xa = mesh_.vertices[a], &xb = mesh_.vertices[b];
    const double L1 = mesh_.Lambda1, L2 = mesh_.Lambda2;
    auto sync = [&](const Vec3& shift) {
      const int pa = points_.find(xa + shift), pb = points_.find(xb + shift);
      if (pa < 0 || pb < 0) return;
      const auto it = edge_tets_.find(edge_key(pa, pb));
      if (it == edge_tets_.end() || it->second.empty()) return;
      split_edge(pa, pb);
    };
    auto on = [&](int axis, double value) {
      return std::abs(xa(axis) - value) <= tol_ && std::abs(xb(axis) - value) <= tol_;
    };
    if (on(0, 0.0)) sync(Vec3(L1, 0, 0));
    if (on(0, L1)) sync(Vec3(-L1, 0, 0));
    if (on(1, 0.0)) sync(Vec3(0, L2, 0));
    if (on(1, L2)) sync(Vec3(0, -L2, 0));
    return m;
  }

  void bisect(int t) {
    const Tet parent = mesh_.tets[t];
    const int k = parent.tag;
    const auto& v = parent.v;
    const int m = split_edge(v[0], v[k]);

    Tet c1, c2;
    int i1 = 0, i2 = 0;
    for (int i = 0; i < k; ++i) c1.v[i1++] = v[i];
    c1.v[i1++] = m;
    for (int i = 1; i <= k; ++i) c2.v[i2++] = v[i];
    c2.v[i2++] = m;
    for (int i = k + 1; i < 4; ++i) {
      c1.v[i1++] = v[i];
      c2.v[i2++] = v[i];
    }
    c1.tag = c2.tag = k > 1 ? k - 1 : 3;
    c1.generation = c2.generation = parent.generation + 1;

    detach(t);
    mesh_.tets[t] = c1;
    const int t2 = mesh_.num_tets();
    mesh_.tets.push_back(c2);
    target_.push_back(target_[t]);
    attach(t);
    attach(t2);
    if (has_split_edge(t)) pending_.push_back(t);
    if (has_split_edge(t2)) pending_.push_back(t2);
  }

  PeriodicTetMesh& mesh_;
  double tol_;
  PointIndex points_;
  std::unordered_map<std::uint64_t, std::vector<int>> edge_tets_;
  std::unordered_map<std::uint64_t, int> split_;
  std::vector<int> pending_;
  std::vector<int> target_;  // generation each tet must reach, -1 if unmarked
  std::size_t work_ = 0;
};

}  // namespace

PeriodicTetMesh refine(const PeriodicTetMesh& mesh, const std::vector<int>& marked, int bisections) {
  if (marked.empty()) throw InvalidParameter("refine: marked set is empty");
  if (bisections < 1) throw InvalidParameter("refine: bisections must be at least 1");
  PeriodicTetMesh out;
  out.Lambda1 = mesh.Lambda1;
  out.Lambda2 = mesh.Lambda2;
  out.h = mesh.h;
  out.profile = mesh.profile;
  out.vertices = mesh.vertices;
  out.tets = mesh.tets;
  out.vertex_parents = mesh.vertex_parents;
  Bisector(out).run(marked, bisections);
  classify_faces(out);
  return out;
}

// ----------------------------------------------------------------- audits

AuditResult audit_conformity(const PeriodicTetMesh& mesh) {
  const double tol = 1e-10 * mesh.length_scale();
  for (int t = 0; t < mesh.num_tets(); ++t)
    if (!(mesh.tet_volume(t) > 0)) return {false, "zero-volume tet " + std::to_string(t)};
  for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
    const Face& face = mesh.faces[f];
    if (face.tets[0] < 0) return {false, "face without tet"};
    if (face.tag == FaceTag::surface)
      for (int v : face.v)
        if (!mesh.profile.on_surface(mesh.vertices[v], mesh.Lambda1, mesh.Lambda2, tol))
          return {false, "boundary face " + std::to_string(f) + " is not on the surface (hanging node?)"};
  }
  // No vertex may sit at the midpoint of an edge: that would be a hanging node.
  PointIndex points(tol);
  for (int v = 0; v < mesh.num_vertices(); ++v) points.insert(mesh.vertices[v], v);
  std::unordered_map<std::uint64_t, char> seen;
  for (const Tet& t : mesh.tets)
    for (const auto& e : kTetEdges) {
      const int a = t.v[e[0]], b = t.v[e[1]];
      if (!seen.emplace(edge_key(a, b), 1).second) continue;
      if (points.find(0.5 * (mesh.vertices[a] + mesh.vertices[b])) >= 0)
        return {false, "hanging vertex on edge (" + std::to_string(a) + ", " + std::to_string(b) + ")"};
    }
  // Every mesh vertex is used.
  std::vector<char> used(mesh.num_vertices(), 0);
  for (const Tet& t : mesh.tets)
    for (int v : t.v) used[v] = 1;
  if (std::find(used.begin(), used.end(), 0) != used.end()) return {false, "unused vertex"};
  return {};
}

AuditResult audit_periodicity(const PeriodicTetMesh& mesh, double tol) {
  for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
    const Face& face = mesh.faces[f];
    if (face.tag != FaceTag::x1_lo && face.tag != FaceTag::x2_lo) continue;
    if (face.partner < 0) return {false, "lateral face without partner"};
    const Vec3 shift = face.tag == FaceTag::x1_lo ? Vec3(mesh.Lambda1, 0, 0) : Vec3(0, mesh.Lambda2, 0);
    const Face& other = mesh.faces[face.partner];
    if (other.partner != f) return {false, "lateral pairing is not an involution"};
    for (int v : face.v) {
      const Vec3 target = mesh.vertices[v] + shift;
      bool found = false;
      for (int w : other.v) found |= (mesh.vertices[w] - target).cwiseAbs().maxCoeff() <= tol;
      if (!found) return {false, "paired lateral faces differ by more than a translation"};
    }
  }
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.x1_image[v] >= 0 &&
        (mesh.vertices[v] - Vec3(mesh.Lambda1, 0, 0) - mesh.vertices[mesh.x1_image[v]]).cwiseAbs().maxCoeff() > tol)
      return {false, "vertex image mismatch across x1"};
    if (mesh.x2_image[v] >= 0 &&
        (mesh.vertices[v] - Vec3(0, mesh.Lambda2, 0) - mesh.vertices[mesh.x2_image[v]]).cwiseAbs().maxCoeff() > tol)
      return {false, "vertex image mismatch across x2"};
  }
  return {};
}

AuditResult audit_volume(const PeriodicTetMesh& mesh, double rel_tol) {
  const double expected = mesh.profile.fluid_volume(mesh.Lambda1, mesh.Lambda2, mesh.h);
  const double got = mesh.total_volume();
  if (std::abs(got - expected) > rel_tol * expected) {
    std::ostringstream msg;
    msg << "volume " << got << " differs from " << expected;
    return {false, msg.str()};
  }
  return {};
}

double min_dihedral_angle(const PeriodicTetMesh& mesh) {
  double best = std::numbers::pi;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const Eigen::Matrix<double, 4, 3> G = mesh.barycentric_gradients(t);
    // The dihedral angle at the edge opposite faces i and j satisfies
    // cos(theta) = -n_i . n_j with n the outward normals (parallel to -grad l).
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        const double c = -G.row(i).normalized().dot(G.row(j).normalized());
        best = std::min(best, std::acos(std::clamp(c, -1.0, 1.0)));
      }
  }
  return best;
}

}  // namespace eldtn
