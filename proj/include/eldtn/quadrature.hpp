#pragma once

#include <span>
#include <vector>

#include "eldtn/common.hpp"

namespace eldtn {

/// Gauss-Legendre rule on [0, 1].
struct LineRule {
  std::vector<double> x;
  std::vector<double> w;
};

/// Rule on the reference triangle {(s, t) : s, t >= 0, s + t <= 1}; weights
/// sum to 1/2.
struct TriangleRule {
  std::vector<Vec2> x;
  std::vector<double> w;
};

/// Rule on the reference tetrahedron; weights sum to 1/6.
struct TetRule {
  std::vector<Vec3> x;
  std::vector<double> w;
};

LineRule gauss_legendre(int n);

// Collapsed (Duffy) product rule with n points per direction. Exact for
// polynomials of total degree 2n - 2.
TriangleRule collapsed_triangle_rule(int n);

// Symmetric 4-point rule, exact for quadratics.
TetRule tet_degree2_rule();

/// Divided difference exp[z_0, ..., z_k] of the exponential function.
/// Nodes may coincide (confluent case).
Complex exp_divided_difference(std::span<const Complex> z);

/// For the affine exponent phi = z0 l0 + z1 l1 + z2 l2 in barycentric
/// coordinates, returns the integrals of l_i e^phi over a triangle of the
/// given area, i = 0, 1, 2.
std::array<Complex, 3> triangle_exp_moments(const std::array<Complex, 3>& z,
                                            double area);

/// Integral of e^phi itself over the triangle.
Complex triangle_exp_integral(const std::array<Complex, 3>& z, double area);

}  // namespace eldtn
