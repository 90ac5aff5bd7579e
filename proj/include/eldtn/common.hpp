#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace eldtn {

using Complex = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using CMat3 = Eigen::Matrix3cd;

/// Lattice mode index (n1, n2).
using ModeIndex = std::array<int, 2>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A physical or geometric parameter violates an invariant.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// |alpha_n| coincides with kappa_1 or kappa_2, so beta_jn vanishes.
class WoodAnomaly : public Error {
 public:
  using Error::Error;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace eldtn
