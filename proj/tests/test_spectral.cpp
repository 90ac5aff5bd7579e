#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "eldtn/analytic.hpp"
#include "eldtn/spectral.hpp"

using namespace eldtn;
using std::numbers::pi;

namespace {

struct FlatCase {
  Medium<> medium = make_medium(1.0, 1.0, 2 * pi);
  Incidence<> inc = make_incidence(medium, pi / 6, pi / 6);
  Lattice<> lattice{1.0, 1.0, 0.3, 0.0};
};

CVec3 random_cvec(std::mt19937& rng) {
  std::normal_distribution<double> g;
  CVec3 v;
  for (int i = 0; i < 3; ++i) v(i) = Complex(g(rng), g(rng));
  return v;
}

// Random physically valid configuration, kept away from Wood anomalies.
struct RandomSetup {
  Medium<> medium;
  Incidence<> inc;
  Lattice<> lattice;
};

RandomSetup random_setup(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomSetup s;
  const double mu = 0.5 + 2.0 * u(rng);
  const double lambda = -0.9 * mu + 4.0 * u(rng);
  s.medium = make_medium(lambda, mu, 2.0 + 10.0 * u(rng));
  s.inc = make_incidence(s.medium, 1.4 * u(rng), 2 * pi * u(rng));
  s.lattice = {0.8 + 0.7 * u(rng), 0.8 + 0.7 * u(rng), 1.0, 0.5};
  return s;
}

ModeData<> random_mode(std::mt19937& rng, const RandomSetup& s, int nmax) {
  std::uniform_int_distribution<int> ni(-nmax, nmax);
  for (;;) {
    try {
      return mode(s.medium, s.inc, s.lattice, {ni(rng), ni(rng)});
    } catch (const WoodAnomaly&) {
    }
  }
}

}  // namespace

TEST(Medium, WavenumbersFromLameParameters) {
  const auto m = make_medium(1.0, 1.0, 2 * pi);
  EXPECT_NEAR(m.kappa1, 2 * pi / std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(m.kappa1, 3.627599, 1e-6);
  EXPECT_NEAR(m.kappa2, 6.283185, 1e-6);
  const auto m2 = make_medium(0.0, 1.0, 1.0);
  EXPECT_NEAR(m2.kappa1, 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(m2.kappa2, 1.0, 1e-15);
  EXPECT_LT(m.kappa1, m.kappa2);
}

TEST(Medium, RejectsInvalidParameters) {
  try {
    make_medium(-2.0, 1.0, 1.0);
    FAIL();
  } catch (const InvalidParameter& e) {
    EXPECT_STREQ(e.what(), "lambda+mu must be positive");
  }
  EXPECT_THROW(make_medium(1.0, 0.0, 1.0), InvalidParameter);
  EXPECT_THROW(make_medium(1.0, 1.0, 0.0), InvalidParameter);
}

TEST(Incidence, DirectionAndTangentialWavevector) {
  const auto m = make_medium(1.0, 1.0, 2 * pi);
  const auto inc = make_incidence(m, pi / 6, pi / 6);
  EXPECT_NEAR(inc.q.norm(), 1.0, 1e-15);
  EXPECT_NEAR(inc.alpha(0), m.kappa1 * std::sqrt(3.0) / 4, 1e-14);
  EXPECT_NEAR(inc.alpha(1), m.kappa1 / 4, 1e-14);
  EXPECT_NEAR(inc.beta, m.kappa1 * std::cos(pi / 6), 1e-14);
  EXPECT_NEAR(inc.q(2), -std::cos(pi / 6), 1e-15);
}

TEST(Mode, NormalIncidenceZeroModeIsDiagonal) {
  const auto m = make_medium(1.0, 1.0, 2 * pi);
  const auto inc = make_incidence(m, 0.0, 0.0);
  const auto md = mode(m, inc, Lattice<>{}, {0, 0});
  EXPECT_NEAR(std::abs(md.beta1 - m.kappa1), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(md.beta2 - m.kappa2), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(md.chi - m.kappa1 * m.kappa2), 0.0, 1e-13);
  CMat3 expected = CMat3::Zero();
  expected(0, 0) = expected(1, 1) = Complex(0, m.kappa2);
  expected(2, 2) = Complex(0, m.kappa2 * m.kappa2 / m.kappa1);
  EXPECT_LT((md.M - expected).norm(), 1e-13);
  // apply_Mn on e3
  const CVec3 out = apply_Mn(md, CVec3(0, 0, 1));
  EXPECT_LT((out - CVec3(0, 0, Complex(0, m.kappa2 * m.kappa2 / m.kappa1))).norm(), 1e-13);
}

TEST(Mode, FlatCaseEvanescentModeChiBounds) {
  FlatCase ex;
  const auto md = mode(ex.medium, ex.inc, ex.lattice, {5, 5});
  EXPECT_GT(md.alpha_norm(), ex.medium.kappa2);
  EXPECT_EQ(md.beta1.real(), 0.0);
  EXPECT_EQ(md.beta2.real(), 0.0);
  EXPECT_GT(md.beta1.imag(), 0.0);
  EXPECT_GT(md.beta2.imag(), 0.0);
  EXPECT_NEAR(md.chi.imag(), 0.0, 1e-12);
  const double k1 = ex.medium.kappa1, k2 = ex.medium.kappa2;
  EXPECT_GT(md.chi.real(), k2 * k2 / 2);
  EXPECT_LT(md.chi.real(), k1 * k1 + k2 * k2);
}

TEST(Mode, ZeroModeVerticalWavenumberIsIncidentBeta) {
  FlatCase ex;
  const auto md = mode(ex.medium, ex.inc, ex.lattice, {0, 0});
  EXPECT_NEAR(std::abs(md.beta1 - ex.inc.beta), 0.0, 1e-14);
  EXPECT_TRUE(md.propagating_p);
  EXPECT_TRUE(md.propagating_s);
}

TEST(Mode, WoodAnomalyRejected) {
  // Choose Lambda1 so that |alpha_(1,0)| hits kappa2 exactly.
  const auto m = make_medium(1.0, 1.0, 2 * pi);
  const auto inc = make_incidence(m, 0.0, 0.0);
  Lattice<> lat{2 * pi / m.kappa2, 1.0, 1.0, 0.0};
  EXPECT_THROW(mode(m, inc, lat, {1, 0}), WoodAnomaly);
  Lattice<> lat1{2 * pi / m.kappa1, 1.0, 1.0, 0.0};
  EXPECT_THROW(mode(m, inc, lat1, {1, 0}), WoodAnomaly);
  EXPECT_NO_THROW(mode(m, inc, lat, {0, 0}));
}

TEST(Helmholtz, ZeroFieldGivesZeroCoefficients) {
  FlatCase ex;
  const auto md = mode(ex.medium, ex.inc, ex.lattice, {1, -2});
  const auto c = coeffs_from_field(md, CVec3::Zero().eval());
  EXPECT_EQ(std::abs(c.phi), 0.0);
  EXPECT_EQ(c.psi.norm(), 0.0);
  EXPECT_EQ(field_from_coeffs(md, HelmholtzCoeffs<>{}).norm(), 0.0);
}

TEST(Helmholtz, RoundTripIsIdentity) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_setup(rng);
    const auto md = random_mode(rng, s, 6);
    const CVec3 u = random_cvec(rng);
    const auto c = coeffs_from_field(md, u);
    EXPECT_LT((field_from_coeffs(md, c) - u).norm(), 1e-12 * u.norm()) << trial;
    // divergence-free shear potential
    const Complex div = md.alpha(0) * c.psi(0) + md.alpha(1) * c.psi(1) + md.beta2 * c.psi(2);
    EXPECT_LT(std::abs(div), 1e-12 * u.norm() * (1 + md.alpha_norm()));
  }
}

TEST(Helmholtz, PureCompressionalTrace) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_setup(rng);
    const auto md = random_mode(rng, s, 4);
    const Complex c0(0.7, -1.3);
    const CVec3 u = CVec3(md.alpha(0), md.alpha(1), md.beta1) * c0;
    const auto c = coeffs_from_field(md, u);
    const double scale = u.norm() / (1 + md.alpha_norm());
    EXPECT_LT(c.psi.norm(), 1e-12 * scale);
    EXPECT_LT(std::abs(c.phi - Complex(0, -1) * c0), 1e-12 * std::abs(c0));
  }
}

TEST(Helmholtz, FieldFromUnitPotentials) {
  FlatCase ex;
  const auto md = mode(ex.medium, ex.inc, ex.lattice, {2, 1});
  HelmholtzCoeffs<> c;
  c.phi = 1.0;
  const CVec3 up = field_from_coeffs(md, c);
  EXPECT_LT((up - Complex(0, 1) * CVec3(md.alpha(0), md.alpha(1), md.beta1)).norm(), 1e-14);
  c.phi = 0.0;
  c.psi = CVec3(0, 0, 1);
  const CVec3 us = field_from_coeffs(md, c);
  EXPECT_LT((us - Complex(0, 1) * CVec3(md.alpha(1), -md.alpha(0), 0)).norm(), 1e-14);
}

TEST(DtnMatrix, MatchesConormalDerivativeOfOutgoingWaves) {
  // Reconstruct the outgoing field above h from its trace and differentiate
  // the plane waves analytically.
  std::mt19937 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_setup(rng);
    const auto md = random_mode(rng, s, 5);
    const CVec3 u = random_cvec(rng);
    const double h = s.lattice.h;
    const auto waves = outgoing_waves(md, coeffs_from_field(md, u), h);
    const Vec3 x(0.0, 0.0, h);
    EXPECT_LT((evaluate(waves, x) - u).norm(), 1e-12 * u.norm());
    const CVec3 Du = conormal_x3(gradient(waves, x), s.medium);
    EXPECT_LT((apply_Mn(md, u) - Du).norm(), 1e-11 * Du.norm()) << trial;
  }
}

TEST(ModeTransfer, IdentityWhenHeightsCoincide) {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_setup(rng);
    const auto md = random_mode(rng, s, 8);
    const CMat3 P = mode_transfer(md, 0.7, 0.7);
    EXPECT_LT((P - CMat3::Identity()).cwiseAbs().maxCoeff(), 1e-12) << trial;
  }
}

TEST(ModeTransfer, MatchesPotentialPropagation) {
  // u(hhat) -> potentials at hhat -> multiply by e^{i beta_j (h-hhat)} ->
  // trace at h.
  std::mt19937 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_setup(rng);
    const auto md = random_mode(rng, s, 4);
    const double h = 1.0, hhat = 0.8;
    const CVec3 u = random_cvec(rng);
    auto c = coeffs_from_field(md, u);
    c.phi *= std::exp(Complex(0, 1) * md.beta1 * (h - hhat));
    c.psi *= std::exp(Complex(0, 1) * md.beta2 * (h - hhat));
    const CVec3 expected = field_from_coeffs(md, c);
    const CVec3 got = mode_transfer(md, h, hhat) * u;
    EXPECT_LT((got - expected).norm(), 1e-11 * (1 + expected.norm())) << trial;
  }
}

TEST(ModeTransfer, PropagatingZeroModeHasUnitDeterminant) {
  FlatCase ex;
  const auto md = mode(ex.medium, ex.inc, ex.lattice, {0, 0});
  const CMat3 P = mode_transfer(md, 0.3, 0.1);
  EXPECT_NEAR(std::abs(P.determinant()), 1.0, 1e-12);
}

TEST(ModeTransfer, RejectsInvertedHeights) {
  FlatCase ex;
  const auto md = mode(ex.medium, ex.inc, ex.lattice, {0, 0});
  EXPECT_THROW(mode_transfer(md, 0.1, 0.3), InvalidParameter);
}

TEST(ModeTransfer, EvanescentEntriesFollowEnvelope) {
  FlatCase ex;
  const double h = 0.3, hhat = 0.0;
  double cmin = 1e300, cmax = 0.0;
  for (int n1 = -50; n1 <= 50; ++n1)
    for (int n2 = -50; n2 <= 50; ++n2) {
      const int nmax = std::max(std::abs(n1), std::abs(n2));
      if (nmax < 5) continue;
      const auto md = mode(ex.medium, ex.inc, ex.lattice, {n1, n2});
      const double env = nmax * std::exp(-std::abs(md.beta2) * (h - hhat));
      const double ratio = mode_transfer(md, h, hhat).cwiseAbs().maxCoeff() / env;
      cmin = std::min(cmin, ratio);
      cmax = std::max(cmax, ratio);
    }
  EXPECT_LT(cmax, 10.0 * cmin) << "cmin " << cmin << " cmax " << cmax;
}

TEST(SymmetricPart, HermitianForEveryMode) {
  std::mt19937 rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_setup(rng);
    const auto md = random_mode(rng, s, 3);
    const CMat3 H = mn_symmetric_part(md);
    EXPECT_LT((H - H.adjoint()).norm(), 1e-15 * (1 + H.norm()));
  }
}

TEST(SymmetricPart, PositiveDefiniteForEvanescentModes) {
  std::mt19937 rng(23);
  int count = 0;
  while (count < 100) {
    const auto s = random_setup(rng);
    const auto md = random_mode(rng, s, 12);
    if (md.alpha_norm() <= s.medium.kappa2) continue;
    ++count;
    const CMat3 H = mn_symmetric_part(md);
    EXPECT_LT((H + md.M).norm(), 1e-12 * md.M.norm());
    Eigen::SelfAdjointEigenSolver<CMat3> eig(H);
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    // Sylvester minors
    EXPECT_GT(H(0, 0).real(), 0.0);
    EXPECT_GT((H.topLeftCorner<2, 2>().determinant().real()), 0.0);
    EXPECT_GT(H.determinant().real(), 0.0);
    const double k1 = s.medium.kappa1, k2 = s.medium.kappa2;
    EXPECT_GT(md.chi.real(), k2 * k2 / 2);
    EXPECT_LT(md.chi.real(), k1 * k1 + k2 * k2);
  }
}

TEST(DtnMatrix, EntriesGrowLinearly) {
  FlatCase ex;
  double cmax = 0.0;
  for (int n1 = -100; n1 <= 100; n1 += 3)
    for (int n2 = -100; n2 <= 100; n2 += 3) {
      const int nmax = std::max({std::abs(n1), std::abs(n2), 1});
      const auto md = mode(ex.medium, ex.inc, ex.lattice, {n1, n2});
      cmax = std::max(cmax, md.M.cwiseAbs().maxCoeff() / nmax);
    }
  // Measured constant for the flat-case lattice: about 14.
  EXPECT_LT(cmax, 20.0);
}

TEST(PropagatingModes, FlatCaseHasThreeShearOrders) {
  FlatCase ex;
  auto modes = propagating_modes(ex.medium, ex.inc, ex.lattice);
  std::sort(modes.begin(), modes.end());
  const std::vector<ModeIndex> expected{{-1, 0}, {0, -1}, {0, 0}};
  EXPECT_EQ(modes, expected);
}

TEST(Efficiencies, SingleCompressionalModeNormalIncidence) {
  const auto m = make_medium(1.0, 1.0, 2 * pi);
  const auto inc = make_incidence(m, 0.0, 0.0);
  const Lattice<> lat{0.5, 0.5, 1.0, 0.0};  // only n = 0 propagates
  const Complex a(0.3, 0.4);
  const auto md = mode(m, inc, lat, {0, 0});
  const CVec3 u0 = Complex(0, 1) * CVec3(md.alpha(0), md.alpha(1), md.beta1) * a;
  const auto table = efficiencies(m, inc, lat, [&](ModeIndex n) {
    return n == ModeIndex{0, 0} ? u0 : CVec3::Zero().eval();
  });
  ASSERT_EQ(table.entries.size(), 2u);
  EXPECT_NEAR(table.entries[0].value, m.kappa1 * m.kappa1 * std::norm(a), 1e-13);
  EXPECT_NEAR(table.entries[1].value, 0.0, 1e-13);
}

TEST(Efficiencies, ZeroFieldGivesZero) {
  FlatCase ex;
  const auto table = efficiencies(ex.medium, ex.inc, ex.lattice,
                                  [](ModeIndex) { return CVec3::Zero().eval(); });
  EXPECT_EQ(table.sum, 0.0);
  EXPECT_EQ(table.entries.size(), 4u);  // one compressional, three shear
}

TEST(Efficiencies, AgreeWithFluxOracleOnRandomExpansions) {
  std::mt19937 rng(29);
  FlatCase ex;
  const double h = ex.lattice.h;
  const double incident = incident_flux(ex.medium, ex.inc);
  for (int trial = 0; trial < 20; ++trial) {
    std::map<ModeIndex, CVec3> traces;
    std::vector<PlaneWave<>> waves;
    for (int n1 = -2; n1 <= 2; ++n1)
      for (int n2 = -2; n2 <= 2; ++n2) {
        const auto md = mode(ex.medium, ex.inc, ex.lattice, {n1, n2});
        const CVec3 u = random_cvec(rng);
        traces[md.n] = u;
        for (const auto& w : outgoing_waves(md, coeffs_from_field(md, u), h)) waves.push_back(w);
      }
    const auto table = efficiencies(ex.medium, ex.inc, ex.lattice, [&](ModeIndex n) { return traces.at(n); });
    const double flux = flux_oracle(waves, ex.medium, h) / incident;
    EXPECT_NEAR(table.sum, flux, 1e-12 * flux) << trial;
  }
}

TEST(TruncationBound, MonotoneAndVanishing) {
  FlatCase ex;
  const double norm = incident_h1_norm(ex.medium, 0.3);
  double prev = 1e300;
  for (int N = 0; N <= 40; ++N) {
    const double e = truncation_bound(ex.medium, ex.inc, ex.lattice, N, norm);
    EXPECT_LE(e, prev);
    if (N >= 3) EXPECT_LT(e, prev);
    prev = e;
  }
  EXPECT_LT(prev, 1e-30);
}

TEST(TruncationBound, MatchesBruteForceMaximum) {
  FlatCase ex;
  for (int N : {0, 1, 3, 8, 15}) {
    double brute = 0.0;
    for (int n1 = -400; n1 <= 400; ++n1)
      for (int n2 = -400; n2 <= 400; ++n2)
        if (std::min(std::abs(n1), std::abs(n2)) > N)
          brute = std::max(brute, truncation_envelope(ex.medium, ex.inc, ex.lattice, {n1, n2}));
    EXPECT_DOUBLE_EQ(truncation_bound(ex.medium, ex.inc, ex.lattice, N, 1.0), brute) << N;
  }
}

TEST(TruncationBound, RejectsDegenerateHeights) {
  FlatCase ex;
  ex.lattice.hhat = ex.lattice.h;
  EXPECT_THROW(truncation_bound(ex.medium, ex.inc, ex.lattice, 3, 1.0), InvalidParameter);
}

TEST(TruncationBound, IncidentNormClosedForm) {
  const auto m = make_medium(1.0, 1.0, 2 * pi);
  EXPECT_NEAR(incident_h1_norm(m, 0.3), std::sqrt(0.3 * (1 + m.kappa1 * m.kappa1)), 1e-15);
}

TEST(ModeTable, IndexingCoversSquare) {
  FlatCase ex;
  const ModeTable<> table(ex.medium, ex.inc, ex.lattice, 3);
  EXPECT_EQ(table.size(), 49);
  for (int n1 = -3; n1 <= 3; ++n1)
    for (int n2 = -3; n2 <= 3; ++n2) {
      const auto& md = table.at({n1, n2});
      EXPECT_EQ(md.n, (ModeIndex{n1, n2}));
    }
}
