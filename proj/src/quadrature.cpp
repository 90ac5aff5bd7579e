#include "eldtn/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace eldtn {

LineRule gauss_legendre(int n) {
  if (n < 1) throw InvalidParameter("gauss_legendre: need at least one point");
  // Returns (P_n(t), P_n'(t)) by the three-term recurrence.
  auto legendre = [n](double t) {
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    return std::pair{p1, n * (t * p1 - p0) / (t * t - 1.0)};
  };
  LineRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(t);
      const double dt = p / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    const double dp = legendre(t).second;
    const double w = 2.0 / ((1.0 - t * t) * dp * dp);
    rule.x[i] = 0.5 * (1.0 - t);
    rule.x[n - 1 - i] = 0.5 * (1.0 + t);
    rule.w[i] = rule.w[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

TriangleRule collapsed_triangle_rule(int n) {
  const LineRule g = gauss_legendre(n);
  TriangleRule rule;
  rule.x.reserve(n * n);
  rule.w.reserve(n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double s = g.x[i];
      const double t = g.x[j] * (1.0 - s);
      rule.x.emplace_back(s, t);
      rule.w.push_back(g.w[i] * g.w[j] * (1.0 - s));
    }
  }
  return rule;
}

TetRule tet_degree2_rule() {
  constexpr double a = 0.5854101966249685;
  constexpr double b = 0.1381966011250105;
  TetRule rule;
  rule.x = {Vec3(b, b, b), Vec3(a, b, b), Vec3(b, a, b), Vec3(b, b, a)};
  rule.w.assign(4, 1.0 / 24.0);
  return rule;
}

namespace {

// Sum_j h_j(y) / (j + k)! with h_j the complete homogeneous symmetric
// polynomials of the k + 1 nodes y. Since |h_j| <= C(j + k, k) r^j with
// r = max |y_i|, the tail after term j is bounded by r^j / (j! k!).
// H[i] holds h_j(y_0..y_i) for the current degree j.
Complex centered_series(std::span<const Complex> y) {
  const int m = static_cast<int>(y.size());
  const int k = m - 1;
  constexpr int kMaxTerms = 64;
  std::array<Complex, 8> H;
  H.fill(Complex(1.0));
  double r = 0.0;
  for (const Complex& yi : y) r = std::max(r, std::abs(yi));

  double inv_fact = 1.0;
  for (int i = 2; i <= k; ++i) inv_fact /= i;
  Complex sum = inv_fact;
  double tail = inv_fact;
  for (int j = 1; j < kMaxTerms; ++j) {
    Complex prev = 0.0;
    for (int i = 0; i < m; ++i) {
      H[i] = prev + y[i] * H[i];
      prev = H[i];
    }
    inv_fact /= (j + k);
    sum += H[m - 1] * inv_fact;
    tail *= r / j;
    if (tail < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

template <int MaxNodes>
struct DividedDifference {
  std::span<const Complex> z;
  std::array<Complex, (1u << MaxNodes)> memo;
  std::array<bool, (1u << MaxNodes)> known{};

  Complex eval(unsigned mask) {
    if (known[mask]) return memo[mask];
    std::array<Complex, 8> pts;
    std::array<int, 8> ids;
    int m = 0;
    for (int i = 0; i < static_cast<int>(z.size()); ++i)
      if (mask & (1u << i)) {
        ids[m] = i;
        pts[m++] = z[i];
      }
    Complex center = 0.0;
    for (int i = 0; i < m; ++i) center += pts[i];
    center /= double(m);
    double spread = 0.0;
    int p = 0, q = 0;
    double dmax = -1.0;
    for (int i = 0; i < m; ++i) {
      spread = std::max(spread, std::abs(pts[i] - center));
      for (int j = i + 1; j < m; ++j) {
        const double d = std::abs(pts[i] - pts[j]);
        if (d > dmax) {
          dmax = d;
          p = i;
          q = j;
        }
      }
    }
    Complex value;
    if (spread <= 1.0) {
      std::array<Complex, 8> y;
      for (int i = 0; i < m; ++i) y[i] = pts[i] - center;
      value = std::exp(center) * centered_series(std::span(y.data(), m));
    } else {
      const unsigned without_p = mask & ~(1u << ids[p]);
      const unsigned without_q = mask & ~(1u << ids[q]);
      value = (eval(without_p) - eval(without_q)) / (pts[q] - pts[p]);
    }
    known[mask] = true;
    memo[mask] = value;
    return value;
  }
};

}  // namespace

Complex exp_divided_difference(std::span<const Complex> z) {
  if (z.empty() || z.size() > 8)
    throw InvalidParameter("exp_divided_difference: between 1 and 8 nodes");
  DividedDifference<8> dd{z, {}, {}};
  return dd.eval((1u << z.size()) - 1);
}

Complex triangle_exp_integral(const std::array<Complex, 3>& z, double area) {
  return 2.0 * area * exp_divided_difference(z);
}

std::array<Complex, 3> triangle_exp_moments(const std::array<Complex, 3>& z,
                                            double area) {
  // Nodes 0..2 are the vertices, 3..5 duplicate them so that the confluent
  // set {z0, z1, z2, z_i} is the mask 0b111 | (1 << (3 + i)); subsets share
  // one memo table.
  const std::array<Complex, 6> nodes{z[0], z[1], z[2], z[0], z[1], z[2]};
  DividedDifference<6> dd{std::span<const Complex>(nodes), {}, {}};
  std::array<Complex, 3> out;
  for (int i = 0; i < 3; ++i)
    out[i] = 2.0 * area * dd.eval(0b111u | (1u << (3 + i)));
  return out;
}

}  // namespace eldtn
