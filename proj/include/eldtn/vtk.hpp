#pragma once

#include <string>
#include <vector>

#include "eldtn/mesh.hpp"

namespace eldtn {

struct VtkPointVector {
  std::string name;
  std::vector<CVec3> values;  // one per mesh vertex
};

struct VtkCellScalar {
  std::string name;
  std::vector<double> values;  // one per tet
};

/// Legacy ASCII unstructured grid (cell type 10). A complex vector field is
/// written as Re/Im vector arrays plus the magnitudes |Re u| and |Im u|.
void write_vtk(const std::string& path, const PeriodicTetMesh& mesh,
               const std::vector<VtkPointVector>& point_data = {},
               const std::vector<VtkCellScalar>& cell_data = {});

}  // namespace eldtn
