#pragma once

// Reference solutions built from plane waves: the incident compressional
// wave, the exact field scattered by a flat rigid surface at z = 0, and an
// energy-flux evaluation that uses the full traction.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "eldtn/spectral.hpp"

namespace eldtn {

/// A e^{i k.x} with complex wave vector k; n labels the lattice mode (the
/// horizontal part of k equals alpha_n).
template <class Real = double>
struct PlaneWave {
  using C = std::complex<Real>;
  ModeIndex n{0, 0};
  Eigen::Matrix<C, 3, 1> k = Eigen::Matrix<C, 3, 1>::Zero();
  Eigen::Matrix<C, 3, 1> amplitude = Eigen::Matrix<C, 3, 1>::Zero();
};

template <class Real>
using CVector3 = Eigen::Matrix<std::complex<Real>, 3, 1>;
template <class Real>
using CMatrix3 = Eigen::Matrix<std::complex<Real>, 3, 3>;

template <class Real>
std::complex<Real> phase(const PlaneWave<Real>& w,
                         const Eigen::Matrix<Real, 3, 1>& x) {
  return std::exp(std::complex<Real>(0, 1) *
                  (w.k.transpose() * x.template cast<std::complex<Real>>())(0));
}

template <class Real>
CVector3<Real> evaluate(const std::vector<PlaneWave<Real>>& waves,
                        const Eigen::Matrix<Real, 3, 1>& x) {
  CVector3<Real> u = CVector3<Real>::Zero();
  for (const auto& w : waves) u += w.amplitude * phase(w, x);
  return u;
}

/// Displacement gradient G(i, j) = d u_i / d x_j.
template <class Real>
CMatrix3<Real> gradient(const std::vector<PlaneWave<Real>>& waves,
                        const Eigen::Matrix<Real, 3, 1>& x) {
  using C = std::complex<Real>;
  CMatrix3<Real> G = CMatrix3<Real>::Zero();
  for (const auto& w : waves) G += (C(0, 1) * phase(w, x)) * w.amplitude * w.k.transpose();
  return G;
}

/// mu Laplace(u) + (lambda+mu) grad div u + omega^2 u, from exact second
/// derivatives of each plane wave.
template <class Real>
CVector3<Real> navier_residual(const std::vector<PlaneWave<Real>>& waves,
                               const Medium<Real>& medium,
                               const Eigen::Matrix<Real, 3, 1>& x) {
  CVector3<Real> r = CVector3<Real>::Zero();
  for (const auto& w : waves) {
    const auto kk = (w.k.transpose() * w.k)(0);
    const auto kA = (w.k.transpose() * w.amplitude)(0);
    r += (-medium.mu * kk * w.amplitude - (medium.lambda + medium.mu) * kA * w.k +
          medium.omega * medium.omega * w.amplitude) *
         phase(w, x);
  }
  return r;
}

/// Co-normal operator mu d_3 u + (lambda+mu)(div u) e_3 applied to a
/// displacement gradient.
template <class Real>
CVector3<Real> conormal_x3(const CMatrix3<Real>& G, const Medium<Real>& medium) {
  CVector3<Real> d = medium.mu * G.col(2);
  d(2) += (medium.lambda + medium.mu) * G.trace();
  return d;
}

template <class Real>
PlaneWave<Real> incident_wave(const Incidence<Real>& inc, const Medium<Real>& medium) {
  PlaneWave<Real> w;
  w.k = (medium.kappa1 * inc.q).template cast<std::complex<Real>>();
  w.amplitude = inc.q.template cast<std::complex<Real>>();
  return w;
}

template <class Real>
CVector3<Real> incident(const Incidence<Real>& inc, const Medium<Real>& medium,
                        const Eigen::Matrix<Real, 3, 1>& x) {
  return evaluate<Real>({incident_wave(inc, medium)}, x);
}

template <class Real>
CMatrix3<Real> incident_gradient(const Incidence<Real>& inc, const Medium<Real>& medium,
                                 const Eigen::Matrix<Real, 3, 1>& x) {
  return gradient<Real>({incident_wave(inc, medium)}, x);
}

template <class Real = double>
struct FlatExactSolution {
  using C = std::complex<Real>;
  C a{};
  CVector3<Real> b = CVector3<Real>::Zero();
  C beta20{};
  C chi{};
  Real residual{};  // max-norm residual of the 4x4 boundary system
  Medium<Real> medium;
  Incidence<Real> incidence;
};

/// The 4x4 matrix of the flat-surface boundary system acting on (a, b1, b2, b3).
template <class Real>
Eigen::Matrix<std::complex<Real>, 4, 4> flat_system_matrix(const Incidence<Real>& inc,
                                                           std::complex<Real> beta20) {
  using C = std::complex<Real>;
  const Real a1 = inc.alpha(0), a2 = inc.alpha(1), b = inc.beta;
  Eigen::Matrix<C, 4, 4> A;
  A << C(a1), C(0), -beta20, C(a2),
       C(a2), beta20, C(0), C(-a1),
       C(b), C(-a2), C(a1), C(0),
       C(0), C(a1), C(a2), beta20;
  return C(0, 1) * A;
}

template <class Real>
FlatExactSolution<Real> flat_exact(const Medium<Real>& medium, const Incidence<Real>& inc) {
  using C = std::complex<Real>;
  const Real t = inc.alpha.norm();
  if (std::abs(t - medium.kappa2) < Real(kWoodTolerance) * medium.kappa2)
    throw WoodAnomaly("flat_exact: zeroth shear mode at a Wood anomaly");
  FlatExactSolution<Real> s;
  s.medium = medium;
  s.incidence = inc;
  s.beta20 = vertical_wavenumber(medium.kappa2, t);
  const C b20 = s.beta20;
  const Real a1 = inc.alpha(0), a2 = inc.alpha(1), beta = inc.beta;
  const Real q1 = inc.q(0), q2 = inc.q(1), q3 = inc.q(2);
  const Real ik = 1 / (medium.kappa2 * medium.kappa2);
  s.chi = t * t + beta * b20;
  const C pre = C(0, 1) / s.chi;
  s.a = pre * (a1 * q1 + a2 * q2 + b20 * q3);
  s.b(0) = pre * (ik * a1 * a2 * (beta - b20) * q1 +
                  ik * (a1 * a1 * b20 + a2 * a2 * beta + beta * b20 * b20) * q2 - a2 * q3);
  s.b(1) = pre * (-ik * (a1 * a1 * beta + a2 * a2 * b20 + beta * b20 * b20) * q1 -
                  ik * a1 * a2 * (beta - b20) * q2 + a1 * q3);
  s.b(2) = C(0, ik) * (a2 * q1 - a1 * q2);

  Eigen::Matrix<C, 4, 1> x, rhs;
  x << s.a, s.b(0), s.b(1), s.b(2);
  rhs << -q1, -q2, -q3, 0;
  s.residual = (flat_system_matrix(inc, b20) * x - rhs).cwiseAbs().maxCoeff();
  return s;
}

/// The two outgoing plane waves of the flat-surface solution.
template <class Real>
std::vector<PlaneWave<Real>> flat_waves(const FlatExactSolution<Real>& s) {
  using C = std::complex<Real>;
  const Real a1 = s.incidence.alpha(0), a2 = s.incidence.alpha(1);
  PlaneWave<Real> p, sh;
  p.k << C(a1), C(a2), C(s.incidence.beta);
  p.amplitude = C(0, 1) * s.a * p.k;
  sh.k << C(a1), C(a2), s.beta20;
  sh.amplitude << a2 * s.b(2) - s.beta20 * s.b(1), s.beta20 * s.b(0) - a1 * s.b(2),
      a1 * s.b(1) - a2 * s.b(0);
  sh.amplitude *= C(0, 1);
  return {p, sh};
}

template <class Real>
CVector3<Real> flat_field(const FlatExactSolution<Real>& s, const Eigen::Matrix<Real, 3, 1>& x) {
  return evaluate(flat_waves(s), x);
}

template <class Real>
CMatrix3<Real> flat_gradient(const FlatExactSolution<Real>& s,
                             const Eigen::Matrix<Real, 3, 1>& x) {
  return gradient(flat_waves(s), x);
}

/// Outgoing waves of a general modal expansion: for every mode with trace
/// coefficients (phi_n, psi_n) at height h, a compressional and a shear wave
/// whose traces at x3 = h are the two parts of field_from_coeffs.
template <class Real>
std::vector<PlaneWave<Real>> outgoing_waves(const ModeData<Real>& m,
                                            const HelmholtzCoeffs<Real>& c, Real h) {
  using C = std::complex<Real>;
  const C I(0, 1);
  PlaneWave<Real> p, sh;
  p.n = sh.n = m.n;
  p.k << C(m.alpha(0)), C(m.alpha(1)), m.beta1;
  sh.k << C(m.alpha(0)), C(m.alpha(1)), m.beta2;
  p.amplitude = compressional_part(m, c) * std::exp(-I * m.beta1 * h);
  sh.amplitude = shear_part(m, c) * std::exp(-I * m.beta2 * h);
  return {p, sh};
}

/// Time-averaged energy flux in +x3 per unit horizontal area through the
/// plane x3 = h, -1/2 Re(sigma e3 . conj(-i omega u)), averaged over the
/// cell. Waves with different mode labels are orthogonal over the cell and
/// do not interact; all pairs sharing a label are summed.
template <class Real>
Real flux_oracle(const std::vector<PlaneWave<Real>>& waves, const Medium<Real>& medium, Real h) {
  using C = std::complex<Real>;
  const C I(0, 1);
  Real flux = 0;
  for (const auto& wp : waves) {
    const C kA = (wp.k.transpose() * wp.amplitude)(0);
    CVector3<Real> t = medium.mu * (wp.k * wp.amplitude(2) + wp.amplitude * wp.k(2));
    t(2) += medium.lambda * kA;
    t *= I;
    for (const auto& wq : waves) {
      if (wq.n != wp.n) continue;
      const C v = -I * medium.omega;  // velocity factor of wq
      const C pairing = (v * wq.amplitude).dot(t);  // t . conj(v A_q)
      const C vertical = std::exp(I * (wp.k(2) - std::conj(wq.k(2))) * h);
      flux += -Real(0.5) * std::real(pairing * vertical);
    }
  }
  return flux;
}

template <class Real>
Real incident_flux(const Medium<Real>& medium, const Incidence<Real>& inc) {
  return medium.omega / 2 * (medium.lambda + 2 * medium.mu) * inc.beta;
}

}  // namespace eldtn
