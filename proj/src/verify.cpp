#include "eldtn/verify.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "eldtn/analytic.hpp"
#include "eldtn/quadrature.hpp"
#include "eldtn/spectral.hpp"

namespace eldtn {

namespace {

using std::numbers::pi;

struct Setup {
  Medium<double> medium;
  Incidence<double> incidence;
  Lattice<double> lattice;
};

Setup flat_case() {
  Setup s;
  s.medium = make_medium(1.0, 1.0, 2 * pi);
  s.incidence = make_incidence(s.medium, pi / 6, pi / 6);
  s.lattice = {1.0, 1.0, 0.3, 0.0};
  return s;
}

Setup random_setup(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Setup s;
  const double mu = 0.5 + 2.0 * u(rng);
  s.medium = make_medium(-0.9 * mu + 4.0 * u(rng), mu, 2.0 + 10.0 * u(rng));
  s.incidence = make_incidence(s.medium, 1.4 * u(rng), 2 * pi * u(rng));
  s.lattice = {0.8 + 0.7 * u(rng), 0.8 + 0.7 * u(rng), 1.0, 0.5};
  return s;
}

ModeData<double> random_mode(std::mt19937& rng, const Setup& s, int nmax) {
  std::uniform_int_distribution<int> ni(-nmax, nmax);
  for (;;) {
    try {
      return mode(s.medium, s.incidence, s.lattice, {ni(rng), ni(rng)});
    } catch (const WoodAnomaly&) {
    }
  }
}

CVec3 random_vector(std::mt19937& rng) {
  std::normal_distribution<double> g;
  CVec3 v;
  for (int i = 0; i < 3; ++i) v(i) = Complex(g(rng), g(rng));
  return v;
}

class Checker {
 public:
  explicit Checker(VerifyGroup& g) : g_(g) {}
  void expect(bool ok, const std::function<std::string()>& what) {
    ++g_.checks;
    if (!ok) {
      g_.passed = false;
      if (g_.failures.size() < 10) g_.failures.push_back(what());
    }
  }

 private:
  VerifyGroup& g_;
};

std::string describe(const std::string& what, double value, double bound) {
  std::ostringstream s;
  s << what << ": " << value << " (bound " << bound << ")";
  return s.str();
}

void spectral_group(Checker& check) {
  std::mt19937 rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const Setup s = random_setup(rng);
    const ModeData<double> m = random_mode(rng, s, 6);
    const CVec3 u = random_vector(rng);
    const double err = (field_from_coeffs(m, coeffs_from_field(m, u)) - u).norm() / u.norm();
    check.expect(err <= 1e-12, [=] { return describe("Helmholtz round trip", err, 1e-12); });
    const double dev = (mode_transfer(m, 0.7, 0.7) - CMat3::Identity()).cwiseAbs().maxCoeff();
    check.expect(dev <= 1e-12, [=] { return describe("transfer at equal heights", dev, 1e-12); });
  }
  for (int trial = 0; trial < 50; ++trial) {
    const Setup s = random_setup(rng);
    const ModeData<double> m = random_mode(rng, s, 5);
    const CVec3 u = random_vector(rng);
    const auto waves = outgoing_waves(m, coeffs_from_field(m, u), s.lattice.h);
    const CVec3 Du = conormal_x3(gradient(waves, Vec3(0, 0, s.lattice.h)), s.medium);
    const double err = (apply_Mn(m, u) - Du).norm() / Du.norm();
    check.expect(err <= 1e-11, [=] { return describe("DtN matrix vs co-normal derivative", err, 1e-11); });
  }
}

void positivity_group(Checker& check, const VerifyOptions& options) {
  std::mt19937 rng(202);
  int count = 0;
  while (count < 100) {
    const Setup s = random_setup(rng);
    ModeData<double> m = random_mode(rng, s, 12);
    if (m.alpha_norm() <= s.medium.kappa2) continue;
    ++count;
    if (options.flip_dtn_sign) m.M = -m.M;
    const CMat3 H = mn_symmetric_part(m);
    const double lo = Eigen::SelfAdjointEigenSolver<CMat3>(H).eigenvalues().minCoeff();
    check.expect(lo > 0, [=] { return describe("minimum eigenvalue of the DtN symmetric part", lo, 0.0); });
    const double k1 = s.medium.kappa1, k2 = s.medium.kappa2, chi = m.chi.real();
    check.expect(chi > k2 * k2 / 2 && chi < k1 * k1 + k2 * k2,
                 [=] { return describe("chi outside (kappa2^2/2, kappa1^2+kappa2^2)", chi, k1 * k1 + k2 * k2); });
  }
}

void fourier_group(Checker& check) {
  std::mt19937 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> ni(-10, 10);
  const Setup ex = flat_case();
  const TriangleRule rule = collapsed_triangle_rule(11);  // degree 20
  for (int trial = 0; trial < 50; ++trial) {
    // Triangles of mesh-face size (side below 0.05) anywhere in the cell.
    const Vec2 c(u(rng), u(rng));
    std::array<Vec2, 3> p;
    for (auto& q : p) q = c + 0.05 * Vec2(u(rng), u(rng));
    const double area = 0.5 * std::abs((p[1] - p[0]).x() * (p[2] - p[0]).y() - (p[1] - p[0]).y() * (p[2] - p[0]).x());
    const ModeIndex n{ni(rng), ni(rng)};
    const Vec2 a = mode_alpha(ex.incidence, ex.lattice, n);
    std::array<Complex, 3> z;
    for (int i = 0; i < 3; ++i) z[i] = Complex(0, -a.dot(p[i]));
    const auto exact = triangle_exp_moments(z, area);
    std::array<Complex, 3> quad{};
    for (std::size_t q = 0; q < rule.w.size(); ++q) {
      const double l1 = rule.x[q](0), l2 = rule.x[q](1), l0 = 1 - l1 - l2;
      const Complex e = std::exp(l0 * z[0] + l1 * z[1] + l2 * z[2]);
      const double w = 2 * area * rule.w[q];
      quad[0] += w * l0 * e;
      quad[1] += w * l1 * e;
      quad[2] += w * l2 * e;
    }
    for (int i = 0; i < 3; ++i) {
      const double err = std::abs(exact[i] - quad[i]) / std::abs(quad[i]);
      check.expect(err <= 1e-10, [=] { return describe("triangle moment vs degree-20 rule", err, 1e-10); });
    }
  }
}

void flat_group(Checker& check) {
  const Setup ex = flat_case();
  const FlatExactSolution<double> sol = flat_exact(ex.medium, ex.incidence);
  check.expect(sol.residual <= 1e-13, [=] { return describe("boundary system residual", sol.residual, 1e-13); });
  std::mt19937 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const Vec3 x(u(rng), u(rng), 0.0);
    const double err = (flat_field(sol, x) + incident(ex.incidence, ex.medium, x)).norm();
    check.expect(err <= 1e-12, [=] { return describe("u + u_inc on the surface", err, 1e-12); });
    const Vec3 y(u(rng), u(rng), 0.3 * u(rng));
    const double res = navier_residual(flat_waves(sol), ex.medium, y).norm();
    const double scale = ex.medium.kappa2 * ex.medium.kappa2 * (1 + std::abs(sol.a) * ex.medium.kappa1 + sol.b.norm() * ex.medium.kappa2);
    check.expect(res <= 1e-10 * scale, [=] { return describe("Navier residual", res, 1e-10 * scale); });
  }
  const CVec3 trace = flat_field(sol, Vec3(0, 0, ex.lattice.h));
  const EfficiencyTable<double> eff = efficiencies(ex.medium, ex.incidence, ex.lattice, [&](ModeIndex n) -> CVec3 {
    return n == ModeIndex{0, 0} ? trace : CVec3::Zero().eval();
  });
  const double dev = std::abs(eff.sum - 1.0);
  check.expect(dev <= 1e-10, [=] { return describe("efficiency sum minus one", dev, 1e-10); });
  const double flux = flux_oracle(flat_waves(sol), ex.medium, ex.lattice.h);
  const double rel = std::abs(flux / incident_flux(ex.medium, ex.incidence) - 1.0);
  check.expect(rel <= 1e-10, [=] { return describe("reflected flux vs incident flux", rel, 1e-10); });
}

}  // namespace

const std::vector<std::string>& verify_group_names() {
  static const std::vector<std::string> names{"spectral", "positivity", "fourier", "flat"};
  return names;
}

VerifyGroup run_verify_group(const std::string& name, const VerifyOptions& options) {
  VerifyGroup g;
  g.name = name;
  Checker check(g);
  if (name == "spectral") spectral_group(check);
  else if (name == "positivity") positivity_group(check, options);
  else if (name == "fourier") fourier_group(check);
  else if (name == "flat") flat_group(check);
  else throw InvalidParameter("unknown verify group '" + name + "'");
  return g;
}

}  // namespace eldtn
