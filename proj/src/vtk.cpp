#include "eldtn/vtk.hpp"

#include <fstream>
#include <iomanip>

namespace eldtn {

void write_vtk(const std::string& path, const PeriodicTetMesh& mesh,
               const std::vector<VtkPointVector>& point_data,
               const std::vector<VtkCellScalar>& cell_data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << std::setprecision(12);
  out << "# vtk DataFile Version 3.0\n"
      << "eldtn field\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const Vec3& x : mesh.vertices) out << x(0) << ' ' << x(1) << ' ' << x(2) << '\n';
  out << "CELLS " << mesh.num_tets() << ' ' << 5 * mesh.num_tets() << '\n';
  for (const Tet& t : mesh.tets) out << "4 " << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << ' ' << t.v[3] << '\n';
  out << "CELL_TYPES " << mesh.num_tets() << '\n';
  for (int t = 0; t < mesh.num_tets(); ++t) out << "10\n";

  if (!point_data.empty()) {
    out << "POINT_DATA " << mesh.num_vertices() << '\n';
    for (const VtkPointVector& f : point_data) {
      if (static_cast<int>(f.values.size()) != mesh.num_vertices())
        throw InvalidParameter("point array " + f.name + " has the wrong length");
      out << "VECTORS Re_" << f.name << " double\n";
      for (const CVec3& u : f.values) out << u(0).real() << ' ' << u(1).real() << ' ' << u(2).real() << '\n';
      out << "VECTORS Im_" << f.name << " double\n";
      for (const CVec3& u : f.values) out << u(0).imag() << ' ' << u(1).imag() << ' ' << u(2).imag() << '\n';
      out << "SCALARS abs_Re_" << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (const CVec3& u : f.values) out << u.real().norm() << '\n';
      out << "SCALARS abs_Im_" << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (const CVec3& u : f.values) out << u.imag().norm() << '\n';
    }
  }
  if (!cell_data.empty()) {
    out << "CELL_DATA " << mesh.num_tets() << '\n';
    for (const VtkCellScalar& f : cell_data) {
      if (static_cast<int>(f.values.size()) != mesh.num_tets())
        throw InvalidParameter("cell array " + f.name + " has the wrong length");
      out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f.values) out << v << '\n';
    }
  }
  if (!out) throw Error("write to " + path + " failed");
}

}  // namespace eldtn
