#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "eldtn/adapt.hpp"

namespace eldtn {

/// A run configuration read from a flat `key = value` file.
struct RunConfig {
  AdaptConfig adapt;
  std::string geometry = "flat";   // flat | bumps | heightmap
  std::filesystem::path outdir = "out";
  std::string text;                // the configuration as read
  bool export_vtk = true;
  int threads = 1;
};

/// Arithmetic on numbers and the constant `pi` with + - * / and parentheses.
double evaluate_expression(std::string_view expr);

/// Parses configuration text. Relative paths (heightmap file, outdir) are
/// resolved against base_dir. Throws ConfigError on unknown keys, malformed
/// values, or parameters that violate a physical or geometric invariant.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");

RunConfig load_config(const std::filesystem::path& path);

/// Heightmap file: "nx ny" followed by nx * ny heights, row n1 major.
SurfaceProfile load_heightmap(const std::filesystem::path& path);

}  // namespace eldtn
