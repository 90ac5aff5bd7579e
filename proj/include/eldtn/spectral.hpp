#pragma once

// Closed-form Fourier-space quantities for the upper half-space above the
// grating: mode lattice, vertical wavenumbers, DtN matrices, Helmholtz
// coefficient conversions, the mode transfer matrix, efficiencies and the
// truncation bound. Everything is templated on the real scalar type.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "eldtn/common.hpp"

namespace eldtn {

template <class Real = double>
struct Medium {
  Real lambda{};
  Real mu{};
  Real omega{};
  Real kappa1{};
  Real kappa2{};
};

template <class Real>
Medium<Real> make_medium(Real lambda, Real mu, Real omega) {
  if (!(mu > 0)) throw InvalidParameter("mu must be positive");
  if (!(lambda + mu > 0)) throw InvalidParameter("lambda+mu must be positive");
  if (!(omega > 0)) throw InvalidParameter("omega must be positive");
  using std::sqrt;
  return {lambda, mu, omega, omega / sqrt(lambda + 2 * mu), omega / sqrt(mu)};
}

template <class Real = double>
struct Incidence {
  Real theta1{};
  Real theta2{};
  Eigen::Matrix<Real, 2, 1> alpha = Eigen::Matrix<Real, 2, 1>::Zero();
  Real beta{};
  Eigen::Matrix<Real, 3, 1> q = Eigen::Matrix<Real, 3, 1>::Zero();
};

/// Compressional plane wave incident from above with polar angle theta1 and
/// azimuth theta2.
template <class Real>
Incidence<Real> make_incidence(const Medium<Real>& medium, Real theta1,
                               Real theta2) {
  using std::cos;
  using std::sin;
  if (!(theta1 >= 0 && theta1 < std::numbers::pi_v<Real> / 2))
    throw InvalidParameter("theta1 must lie in [0, pi/2)");
  Incidence<Real> inc;
  inc.theta1 = theta1;
  inc.theta2 = theta2;
  inc.q << sin(theta1) * cos(theta2), sin(theta1) * sin(theta2), -cos(theta1);
  inc.alpha << medium.kappa1 * inc.q(0), medium.kappa1 * inc.q(1);
  inc.beta = medium.kappa1 * cos(theta1);
  return inc;
}

/// Periods of the cell, the artificial boundary height h and the auxiliary
/// height hhat between the top of the surface and h.
template <class Real = double>
struct Lattice {
  Real Lambda1 = 1;
  Real Lambda2 = 1;
  Real h = 1;
  Real hhat = 0;
};

template <class Real>
void validate(const Lattice<Real>& lattice) {
  if (!(lattice.Lambda1 > 0) || !(lattice.Lambda2 > 0))
    throw InvalidParameter("periods Lambda1, Lambda2 must be positive");
  if (!(lattice.hhat <= lattice.h))
    throw InvalidParameter("hhat must not exceed h");
}

template <class Real = double>
struct ModeData {
  using C = std::complex<Real>;
  using CMat = Eigen::Matrix<C, 3, 3>;

  ModeIndex n{0, 0};
  Eigen::Matrix<Real, 2, 1> alpha = Eigen::Matrix<Real, 2, 1>::Zero();
  C beta1{};
  C beta2{};
  C chi{};
  C beta_diff{};  // beta1 - beta2
  CMat M = CMat::Zero();
  bool propagating_p = false;
  bool propagating_s = false;
  Real kappa1{};
  Real kappa2{};

  Real alpha_norm() const { return alpha.norm(); }
};

/// Vertical wavenumber sqrt(kappa^2 - t^2) on the physical branch: real
/// nonnegative below the cutoff, positive imaginary above it.
template <class Real>
std::complex<Real> vertical_wavenumber(Real kappa, Real t) {
  using std::abs;
  using std::sqrt;
  const Real d = (kappa - t) * (kappa + t);
  if (d >= 0) return {sqrt(d), Real(0)};
  return {Real(0), sqrt(-d)};
}

template <class Real>
Eigen::Matrix<Real, 2, 1> mode_alpha(const Incidence<Real>& inc,
                                     const Lattice<Real>& lattice,
                                     ModeIndex n) {
  const Real two_pi = 2 * std::numbers::pi_v<Real>;
  return {inc.alpha(0) + two_pi * n[0] / lattice.Lambda1,
          inc.alpha(1) + two_pi * n[1] / lattice.Lambda2};
}

constexpr double kWoodTolerance = 1e-10;

template <class Real>
ModeData<Real> mode(const Medium<Real>& medium, const Incidence<Real>& inc,
                    const Lattice<Real>& lattice, ModeIndex n) {
  using C = std::complex<Real>;
  using std::abs;
  ModeData<Real> m;
  m.n = n;
  m.alpha = mode_alpha(inc, lattice, n);
  m.kappa1 = medium.kappa1;
  m.kappa2 = medium.kappa2;
  const Real t = m.alpha.norm();
  for (Real kappa : {medium.kappa1, medium.kappa2}) {
    if (abs(t - kappa) < Real(kWoodTolerance) * kappa) {
      std::ostringstream msg;
      msg << "Wood anomaly at mode (" << n[0] << ", " << n[1]
          << "): |alpha_n| = " << t << " coincides with wavenumber " << kappa;
      throw WoodAnomaly(msg.str());
    }
  }
  m.beta1 = vertical_wavenumber(medium.kappa1, t);
  m.beta2 = vertical_wavenumber(medium.kappa2, t);
  m.propagating_p = t < medium.kappa1;
  m.propagating_s = t < medium.kappa2;
  // beta1 - beta2 and chi in cancellation-free form; the direct
  // expressions lose digits for |alpha_n| >> kappa2.
  m.beta_diff = (medium.kappa1 - medium.kappa2) * (medium.kappa1 + medium.kappa2) /
                (m.beta1 + m.beta2);
  m.chi = medium.kappa1 * medium.kappa1 - m.beta1 * m.beta_diff;

  const Real a1 = m.alpha(0), a2 = m.alpha(1);
  const C b = m.beta_diff;
  const C b2 = m.beta2, chi = m.chi;
  const Real k2sq = medium.kappa2 * medium.kappa2;
  typename ModeData<Real>::CMat M;
  M << a1 * a1 * b + b2 * chi, a1 * a2 * b, a1 * b2 * b,
      a1 * a2 * b, a2 * a2 * b + b2 * chi, a2 * b2 * b,
      -a1 * b2 * b, -a2 * b2 * b, k2sq * b2;
  m.M = (C(0, medium.mu) / chi) * M;
  return m;
}

template <class Real = double>
struct HelmholtzCoeffs {
  using C = std::complex<Real>;
  C phi{};
  Eigen::Matrix<C, 3, 1> psi = Eigen::Matrix<C, 3, 1>::Zero();
};

/// Compressional and shear potential coefficients of the outgoing mode with
/// trace u_n at the artificial boundary.
template <class Real>
HelmholtzCoeffs<Real> coeffs_from_field(
    const ModeData<Real>& m,
    const Eigen::Matrix<std::complex<Real>, 3, 1>& u) {
  using C = std::complex<Real>;
  const Real a1 = m.alpha(0), a2 = m.alpha(1);
  const C b1 = m.beta1, b2 = m.beta2;
  const Real inv_k2sq = 1 / (m.kappa2 * m.kappa2);
  const C pre = C(0, -1) / m.chi;
  // delta = (beta2 - beta1) / kappa2^2. With beta2^2 = kappa2^2 - |alpha|^2,
  // (a1^2 b2 + a2^2 b1 + b1 b2^2) / kappa2^2 = b1 + a1^2 delta and
  // (a1^2 b1 + a2^2 b2 + b1 b2^2) / kappa2^2 = b1 + a2^2 delta.
  const C delta = -m.beta_diff * inv_k2sq;
  HelmholtzCoeffs<Real> c;
  c.phi = pre * (a1 * u(0) + a2 * u(1) + b2 * u(2));
  c.psi(0) = pre * (-a1 * a2 * delta * u(0) + (b1 + a1 * a1 * delta) * u(1) - a2 * u(2));
  c.psi(1) = pre * (-(b1 + a2 * a2 * delta) * u(0) + a1 * a2 * delta * u(1) + a1 * u(2));
  c.psi(2) = C(0, -inv_k2sq) * (a2 * u(0) - a1 * u(1));
  return c;
}

/// Shear part i * (curl-combination of psi) of the reconstructed trace.
template <class Real>
Eigen::Matrix<std::complex<Real>, 3, 1> shear_part(
    const ModeData<Real>& m, const HelmholtzCoeffs<Real>& c) {
  using C = std::complex<Real>;
  const Real a1 = m.alpha(0), a2 = m.alpha(1);
  const C b2 = m.beta2;
  Eigen::Matrix<C, 3, 1> v;
  v << a2 * c.psi(2) - b2 * c.psi(1), b2 * c.psi(0) - a1 * c.psi(2),
      a1 * c.psi(1) - a2 * c.psi(0);
  return C(0, 1) * v;
}

template <class Real>
Eigen::Matrix<std::complex<Real>, 3, 1> compressional_part(
    const ModeData<Real>& m, const HelmholtzCoeffs<Real>& c) {
  using C = std::complex<Real>;
  Eigen::Matrix<C, 3, 1> v;
  v << C(m.alpha(0)), C(m.alpha(1)), m.beta1;
  return C(0, 1) * c.phi * v;
}

template <class Real>
Eigen::Matrix<std::complex<Real>, 3, 1> field_from_coeffs(
    const ModeData<Real>& m, const HelmholtzCoeffs<Real>& c) {
  return compressional_part(m, c) + shear_part(m, c);
}

template <class Real>
Eigen::Matrix<std::complex<Real>, 3, 1> apply_Mn(
    const ModeData<Real>& m,
    const Eigen::Matrix<std::complex<Real>, 3, 1>& u) {
  return m.M * u;
}

/// Matrix mapping the mode trace at height hhat to the trace at height h.
/// Its entries collapse, via beta2^2 + |alpha|^2 = kappa2^2, to
/// chi E2 I + (E1 - E2) (a1, a2, b1)^T (a1, a2, b2) with E_j the vertical
/// propagation factors; the result is divided by chi.
template <class Real>
Eigen::Matrix<std::complex<Real>, 3, 3> mode_transfer(const ModeData<Real>& m,
                                                      Real h, Real hhat) {
  using C = std::complex<Real>;
  if (hhat > h) throw InvalidParameter("mode_transfer: requires hhat <= h");
  const C I(0, 1);
  const Real d = h - hhat;
  const C E1 = std::exp(I * m.beta1 * d);
  const C E2 = std::exp(I * m.beta2 * d);
  Eigen::Matrix<C, 3, 1> left, right;
  left << C(m.alpha(0)), C(m.alpha(1)), m.beta1;
  right << C(m.alpha(0)), C(m.alpha(1)), m.beta2;
  Eigen::Matrix<C, 3, 3> P = ((E1 - E2) / m.chi) * left * right.transpose();
  P.diagonal().array() += E2;
  return P;
}

/// Hermitian part -(M + M^H)/2, positive definite for evanescent modes.
template <class Real>
Eigen::Matrix<std::complex<Real>, 3, 3> mn_symmetric_part(
    const ModeData<Real>& m) {
  return -(m.M + m.M.adjoint()) / Real(2);
}

/// All n with |alpha_n| < kappa2 (both wave types included).
template <class Real>
std::vector<ModeIndex> propagating_modes(const Medium<Real>& medium,
                                         const Incidence<Real>& inc,
                                         const Lattice<Real>& lattice) {
  using std::ceil;
  using std::floor;
  const Real two_pi = 2 * std::numbers::pi_v<Real>;
  const Real k = medium.kappa2;
  const int lo1 = int(floor((-k - inc.alpha(0)) * lattice.Lambda1 / two_pi));
  const int hi1 = int(ceil((k - inc.alpha(0)) * lattice.Lambda1 / two_pi));
  const int lo2 = int(floor((-k - inc.alpha(1)) * lattice.Lambda2 / two_pi));
  const int hi2 = int(ceil((k - inc.alpha(1)) * lattice.Lambda2 / two_pi));
  std::vector<ModeIndex> out;
  for (int n1 = lo1; n1 <= hi1; ++n1)
    for (int n2 = lo2; n2 <= hi2; ++n2)
      if (mode_alpha(inc, lattice, {n1, n2}).norm() < k) out.push_back({n1, n2});
  return out;
}

template <class Real = double>
struct Efficiency {
  ModeIndex n{0, 0};
  char type = 'c';  // 'c' compressional, 's' shear
  Real value{};
};

template <class Real = double>
struct EfficiencyTable {
  std::vector<Efficiency<Real>> entries;
  Real sum{};
};

/// Efficiencies of the reflected propagating modes: x3 energy flux of each
/// mode normalized by the incident flux (omega/2)(lambda+2mu)beta. The
/// callable maps a mode index to the scattered trace u_n(h).
template <class Real, class TraceLookup>
EfficiencyTable<Real> efficiencies(const Medium<Real>& medium,
                                   const Incidence<Real>& inc,
                                   const Lattice<Real>& lattice,
                                   TraceLookup&& trace) {
  EfficiencyTable<Real> table;
  const Real scale_s = medium.mu / (medium.lambda + 2 * medium.mu);
  for (const ModeIndex& n : propagating_modes(medium, inc, lattice)) {
    const ModeData<Real> m = mode(medium, inc, lattice, n);
    const HelmholtzCoeffs<Real> c = coeffs_from_field(m, trace(n));
    if (m.propagating_p) {
      const Real e = medium.kappa1 * medium.kappa1 * m.beta1.real() *
                     std::norm(c.phi) / inc.beta;
      table.entries.push_back({n, 'c', e});
      table.sum += e;
    }
    const Real e = scale_s * m.beta2.real() * shear_part(m, c).squaredNorm() / inc.beta;
    table.entries.push_back({n, 's', e});
    table.sum += e;
  }
  return table;
}

/// H1 norm of the incident plane wave over a region of the given volume:
/// |u| = 1 and |grad u|_F = kappa1 pointwise.
template <class Real>
Real incident_h1_norm(const Medium<Real>& medium, Real volume) {
  using std::sqrt;
  return sqrt(volume * (1 + medium.kappa1 * medium.kappa1));
}

/// Envelope |n|_max exp(-|beta_2n| (h - hhat)) of the truncation bound.
template <class Real>
Real truncation_envelope(const Medium<Real>& medium, const Incidence<Real>& inc,
                         const Lattice<Real>& lattice, ModeIndex n) {
  using std::abs;
  using std::exp;
  const Real t = mode_alpha(inc, lattice, n).norm();
  const Real b2 = abs(vertical_wavenumber(medium.kappa2, t));
  return Real(std::max(std::abs(n[0]), std::abs(n[1]))) *
         exp(-b2 * (lattice.h - lattice.hhat));
}

/// Truncation bound: sup over {n : min(|n1|, |n2|) > N} of the envelope,
/// times the incident H1 norm. The supremum is found by scanning rings
/// max(|n1|, |n2|) = m outward until a monotone upper bound for all further
/// rings drops below the running maximum.
template <class Real>
Real truncation_bound(const Medium<Real>& medium, const Incidence<Real>& inc,
                      const Lattice<Real>& lattice, int N, Real uinc_h1norm) {
  using std::abs;
  using std::exp;
  using std::sqrt;
  if (N < 0) throw InvalidParameter("truncation_bound: N must be nonnegative");
  const Real d = lattice.h - lattice.hhat;
  if (!(d > 0)) throw InvalidParameter("truncation_bound: requires h > hhat");
  const Real two_pi = 2 * std::numbers::pi_v<Real>;
  const Real k2 = medium.kappa2;
  const Real max_period = std::max(lattice.Lambda1, lattice.Lambda2);

  Real best = 0;
  for (int m = N + 1;; ++m) {
    for (int s1 : {-1, 1})
      for (int s2 : {-1, 1})
        for (int j = N + 1; j <= m; ++j) {
          best = std::max(best, truncation_envelope(medium, inc, lattice, {s1 * m, s2 * j}));
          best = std::max(best, truncation_envelope(medium, inc, lattice, {s1 * j, s2 * m}));
        }
    // Every n on ring m' >= m has |alpha_n| >= L(m').
    const Real next = Real(m + 1);
    const Real L = std::min(two_pi * next / lattice.Lambda1 - abs(inc.alpha(0)),
                            two_pi * next / lattice.Lambda2 - abs(inc.alpha(1)));
    if (L > k2) {
      const Real bound = next * exp(-d * sqrt(L * L - k2 * k2));
      const bool decreasing = 1 / next < d * two_pi / max_period;
      if (decreasing && bound <= best) break;
    }
    if (m > N + 1000000) throw InvalidParameter("truncation_bound: scan did not terminate");
  }
  return best * uinc_h1norm;
}

/// Cached ModeData for the square |n1|, |n2| <= N, stored row by row in n1.
template <class Real = double>
class ModeTable {
 public:
  ModeTable() = default;
  ModeTable(const Medium<Real>& medium, const Incidence<Real>& inc,
            const Lattice<Real>& lattice, int N)
      : N_(N) {
    if (N < 0) throw InvalidParameter("ModeTable: N must be nonnegative");
    modes_.reserve(size());
    for (int n1 = -N; n1 <= N; ++n1)
      for (int n2 = -N; n2 <= N; ++n2) modes_.push_back(mode(medium, inc, lattice, {n1, n2}));
  }

  int N() const { return N_; }
  int size() const { return (2 * N_ + 1) * (2 * N_ + 1); }
  int index(ModeIndex n) const { return (n[0] + N_) * (2 * N_ + 1) + n[1] + N_; }
  const ModeData<Real>& operator[](int i) const { return modes_[i]; }
  const ModeData<Real>& at(ModeIndex n) const { return modes_[index(n)]; }
  auto begin() const { return modes_.begin(); }
  auto end() const { return modes_.end(); }

 private:
  int N_ = 0;
  std::vector<ModeData<Real>> modes_;
};

}  // namespace eldtn
