// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eldtn/adapt.hpp"
#include "eldtn/analytic.hpp"
#include "eldtn/verify.hpp"

using namespace eldtn;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

AdaptConfig flat_config() {
  AdaptConfig c;
  c.medium = make_medium(1.0, 1.0, 2 * pi);
  c.incidence = make_incidence(c.medium, pi / 6, pi / 6);
  c.h = 0.3;
  c.divisions = {8, 8, 3};
  c.max_dofs = 100000;
  c.epsilon = 0.0;
  return c;
}

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

bool verify_group(const std::string& name, Outcome& o) {
  const VerifyGroup g = run_verify_group(name);
  o.detail << " " << name << ": " << g.checks << " checks";
  for (const std::string& f : g.failures) o.detail << " [" << f << "]";
  if (!g.passed) o.pass = false;
  return g.passed;
}

// ---------------------------------------------------------------- criteria

Outcome convergence_slope(const AdaptResult& run) {
  Outcome o;
  const auto& r = run.records;
  o.require(r.size() >= 4, "at least four iterations");
  o.require(r.back().n_dofs >= 100000, "final mesh has at least 1e5 DoFs");
  bool increasing = true;
  for (std::size_t i = 1; i < r.size(); ++i) increasing = increasing && r[i].n_dofs > r[i - 1].n_dofs;
  o.require(increasing, "DoF count increases every iteration");
  if (r.size() >= 4) {
    std::vector<double> dofs, err;
    for (std::size_t i = r.size() - 4; i < r.size(); ++i) {
      dofs.push_back(r[i].n_dofs);
      err.push_back(*r[i].h1_error);
    }
    const double slope = loglog_slope(dofs, err);
    o.detail << " slope " << slope << " over DoFs " << dofs.front() << ".." << dofs.back();
    o.require(slope >= -0.45 && slope <= -0.22, "slope in [-0.45, -0.22]");
  }
  return o;
}

Outcome energy_conservation(const AdaptResult& run) {
  Outcome o;
  const AdaptConfig c = flat_config();
  const FlatExactSolution<double> sol = flat_exact(c.medium, c.incidence);
  const CVec3 trace = flat_field(sol, Vec3(0, 0, c.h));
  const EfficiencyTable<double> exact = efficiencies(c.medium, c.incidence, c.lattice(), [&](ModeIndex n) -> CVec3 {
    return n == ModeIndex{0, 0} ? trace : CVec3::Zero().eval();
  });
  const double dev_exact = std::abs(exact.sum - 1.0);
  o.detail << " analytic |sum-1| " << dev_exact;
  o.require(dev_exact <= 1e-10, "analytic efficiencies sum to 1 within 1e-10");

  const auto& r = run.records;
  const double dev_final = std::abs(r.back().efficiency_sum - 1.0);
  o.detail << "; FEM |sum-1| at " << r.back().n_dofs << " DoFs " << dev_final << "; last deviations";
  o.require(r.back().n_dofs >= 100000, "FEM check at >= 1e5 DoFs");
  o.require(dev_final <= 5e-2, "FEM efficiencies sum to 1 within 5e-2");
  const std::size_t k = r.size();
  o.require(k >= 3, "three iterations to compare");
  if (k >= 3) {
    std::vector<double> d;
    for (std::size_t i = k - 3; i < k; ++i) d.push_back(std::abs(r[i].efficiency_sum - 1.0));
    for (double v : d) o.detail << " " << v;
    o.require(d[1] <= 1.1 * d[0] && d[2] <= 1.1 * d[1], "deviation decreases (10% upticks allowed)");
    o.require(d[2] < d[0], "deviation decreases overall");
  }
  return o;
}

Outcome truncation_machinery() {
  Outcome o;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Medium<double> med = make_medium(0.5 + 2 * u(rng), 0.5 + u(rng), 2 + 8 * u(rng));
    const Incidence<double> inc = make_incidence(med, 1.4 * u(rng), 2 * pi * u(rng));
    const Lattice<double> lattice{0.8 + 0.5 * u(rng), 0.8 + 0.5 * u(rng), 1.0, 0.3 + 0.65 * u(rng)};
    const double target = std::pow(10.0, -2 - 10 * u(rng));
    const double uinc = incident_h1_norm(med, 1.0);
    const int N = choose_N(med, inc, lattice, target, uinc);
    int brute = 1;
    while (truncation_bound(med, inc, lattice, brute, uinc) > target) ++brute;
    mismatches += N != brute;
    double prev = truncation_bound(med, inc, lattice, 0, uinc);
    for (int n = 1; n <= 60; ++n) {
      const double b = truncation_bound(med, inc, lattice, n, uinc);
      if (b > prev) {
        o.require(false, "eps_N non-increasing in N");
        break;
      }
      prev = b;
    }
  }
  o.detail << " choose_N mismatches " << mismatches << "/50";
  o.require(mismatches == 0, "choose_N equals the brute-force scan");

  // Evanescent transfer entries against |n| exp(-|beta_2n| (h - hhat)).
  const AdaptConfig c = flat_config();
  const Lattice<double> l = c.lattice();
  double lo = 1e300, hi = 0.0;
  for (int n1 = -50; n1 <= 50; ++n1)
    for (int n2 = -50; n2 <= 50; ++n2) {
      const int nmax = std::max(std::abs(n1), std::abs(n2));
      if (nmax < 5) continue;
      const ModeData<double> m = mode(c.medium, c.incidence, l, {n1, n2});
      const double env = nmax * std::exp(-std::abs(m.beta2) * (l.h - l.hhat));
      const double ratio = mode_transfer(m, l.h, l.hhat).cwiseAbs().maxCoeff() / env;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
  o.detail << "; transfer/envelope in [" << lo << ", " << hi << "]";
  o.require(hi <= 10 * lo, "transfer entries within a factor 10 of the envelope");
  return o;
}

Outcome spectral_identities() {
  Outcome o;
  verify_group("spectral", o);
  verify_group("positivity", o);
  return o;
}

Outcome dtn_identity() {
  // Radiating analytic field: the flat-surface solution plus random
  // outgoing modes. Its Fourier data on x3 = h are computed by the
  // trapezoidal rule, exact for these band-limited traces.
  Outcome o;
  const AdaptConfig c = flat_config();
  const Lattice<double> l = c.lattice();
  const int N = 6;
  const ModeTable<double> modes(c.medium, c.incidence, l, N);
  std::vector<PlaneWave<double>> waves = flat_waves(flat_exact(c.medium, c.incidence));
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  for (const auto& m : modes) {
    CVec3 t;
    for (int i = 0; i < 3; ++i) t(i) = 0.1 * Complex(g(rng), g(rng));
    for (const auto& w : outgoing_waves(m, coeffs_from_field(m, t), l.h)) waves.push_back(w);
  }
  const int M = 4 * N + 4;
  std::vector<CVec3> u(M * M), Du(M * M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      const Vec3 x(l.Lambda1 * i / M, l.Lambda2 * j / M, l.h);
      u[i * M + j] = evaluate(waves, x);
      Du[i * M + j] = conormal_x3(gradient(waves, x), c.medium);
    }
  double worst = 0.0, scale = 0.0;
  for (const auto& m : modes) {
    CVec3 un = CVec3::Zero(), dn = CVec3::Zero();
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j) {
        const Vec2 r(l.Lambda1 * i / M, l.Lambda2 * j / M);
        const Complex e = std::exp(Complex(0, -m.alpha.dot(r))) / double(M * M);
        un += e * u[i * M + j];
        dn += e * Du[i * M + j];
      }
    worst = std::max(worst, (dn - m.M * un).norm());
    scale = std::max(scale, dn.norm());
  }
  o.detail << " max |(Du)_n - M_n u_n| / max |(Du)_n| = " << worst / scale << " over " << modes.size() << " modes";
  o.require(worst <= 1e-10 * scale, "DtN identity to 1e-10");
  return o;
}

Outcome fourier_oracle() {
  Outcome o;
  verify_group("fourier", o);
  return o;
}

Outcome boundary_exactness() {
  Outcome o;
  const AdaptConfig c = flat_config();
  const PeriodicTetMesh mesh = build_mesh(c.profile, c.Lambda1, c.Lambda2, c.h, c.divisions);
  const ModeTable<double> modes(c.medium, c.incidence, c.lattice(), 8);
  const Solution s = solve_once(mesh, c, modes);
  double surface = 0.0, lateral = 0.0;
  int pairs = 0;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.on_surface[v])
      surface = std::max(surface, (s.field.nodal[v] + incident(c.incidence, c.medium, mesh.vertices[v])).norm());
    if (mesh.on_surface[v]) continue;
    if (mesh.x1_image[v] >= 0) {
      lateral = std::max(lateral, (s.field.nodal[v] - s.dofs.phase_x1 * s.field.nodal[mesh.x1_image[v]]).norm());
      ++pairs;
    }
    if (mesh.x2_image[v] >= 0) {
      lateral = std::max(lateral, (s.field.nodal[v] - s.dofs.phase_x2 * s.field.nodal[mesh.x2_image[v]]).norm());
      ++pairs;
    }
  }
  o.detail << " max |u + u_inc| on S " << surface << "; max lateral phase defect " << lateral << " over " << pairs
           << " pairs";
  o.require(surface <= 1e-12, "surface values exact");
  o.require(lateral <= 1e-12, "lateral phase relation exact");
  return o;
}

Outcome solver_contracts(const AdaptResult& run) {
  Outcome o;
  double worst = 0.0;
  for (const auto& r : run.records) worst = std::max(worst, r.relative_residual);
  o.detail << " worst adaptive residual " << worst;
  o.require(worst <= 1e-9, "adaptive residuals <= 1e-9");

  const AdaptConfig c = flat_config();
  const PeriodicTetMesh mesh = build_mesh(c.profile, c.Lambda1, c.Lambda2, c.h, {6, 6, 2});
  const ModeTable<double> modes(c.medium, c.incidence, c.lattice(), 8);
  const DofMap dofs = build_dofmap(mesh, c.incidence);
  const auto lift = dirichlet_lift(mesh, dofs, c.medium, c.incidence);
  SolverOptions dense, low;
  dense.path = DtnPath::dense_block;
  low.path = DtnPath::low_rank;
  const SolveResult a = solve(assemble(mesh, dofs, c.medium, c.incidence, modes, lift, dense), dense);
  const SolveResult b = solve(assemble(mesh, dofs, c.medium, c.incidence, modes, lift, low), low);
  const double diff = (a.x - b.x).norm() / a.x.norm();
  o.detail << "; dense vs low-rank " << diff << " (residuals " << a.relative_residual << ", " << b.relative_residual
           << ")";
  o.require(a.relative_residual <= 1e-9 && b.relative_residual <= 1e-9, "coarse residuals <= 1e-9");
  o.require(diff <= 1e-8, "paths agree to 1e-8");
  return o;
}

Outcome mesh_audits() {
  Outcome o;
  const SurfaceProfile bumps =
      SurfaceProfile::bumps(0.0, {{0.125, 0.375, 0.125, 0.375, 0.2}, {0.625, 0.875, 0.625, 0.875, 0.2}});
  PeriodicTetMesh m = build_mesh(bumps, 1.0, 1.0, 0.6, {8, 8, 3});
  const double angle0 = min_dihedral_angle(m);
  std::mt19937 rng(9);
  for (int round = 0; round < 10; ++round) {
    // Refine toward the bump edges and corners, plus scattered tets.
    std::vector<int> marked;
    std::bernoulli_distribution pick(0.03);
    for (int t = 0; t < m.num_tets(); ++t) {
      bool edge = false;
      for (int v : m.tets[t].v) {
        const Vec3& x = m.vertices[v];
        const bool on_top = std::abs(x(2) - 0.2) < 1e-9;
        const bool ring = std::abs(x(0) - 0.375) < 1e-9 || std::abs(x(0) - 0.625) < 1e-9 ||
                          std::abs(x(1) - 0.125) < 1e-9 || std::abs(x(1) - 0.875) < 1e-9;
        edge = edge || (on_top && ring);
      }
      if (edge || pick(rng)) marked.push_back(t);
    }
    m = refine(m, marked);
    for (const AuditResult& a : {audit_conformity(m), audit_periodicity(m, 1e-12), audit_volume(m, 1e-12)})
      if (!a.ok) {
        o.require(false, "round " + std::to_string(round) + ": " + a.message);
        return o;
      }
  }
  const double angle = min_dihedral_angle(m);
  o.detail << " " << m.num_tets() << " tets after 10 rounds; min dihedral angle " << angle * 180 / pi
           << " deg (initial " << angle0 * 180 / pi << ")";
  o.require(angle >= 0.5 * angle0, "min dihedral angle at least half the initial one");
  return o;
}

Outcome estimator_audits(const AdaptResult& run) {
  Outcome o;
  long double acc = 0.0;
  for (double e : run.indicators.eta) acc += static_cast<long double>(e) * e;
  const double sum = static_cast<double>(acc);
  const double sweep = face_sweep_total(run.mesh, run.indicators);
  const double rel = std::abs(sweep - sum) / sum;
  o.detail << " face sweep vs element sum " << rel << "; effectivity";
  o.require(rel <= 1e-12, "face sweep agrees to 1e-12");
  for (const auto& r : run.records) {
    const double eff = *r.h1_error / r.eps_h;
    o.detail << " " << std::setprecision(3) << eff;
    o.require(eff >= 0.01 && eff <= 100, "effectivity in [0.01, 100] at iteration " + std::to_string(r.iter));
  }
  return o;
}

}  // namespace

int main() {
  std::cout << std::setprecision(4);
  const auto t0 = std::chrono::steady_clock::now();
  std::cout << "adaptive run on the flat benchmark, max_dofs 1e5" << std::endl;
  const AdaptResult run = eldtn::run(flat_config(), [](const IterationRecord& r) {
    std::cout << "  iter " << r.iter << "  dofs " << r.n_dofs << "  H1 error " << *r.h1_error << "  eps_h " << r.eps_h
              << "  efficiency sum " << std::setprecision(8) << r.efficiency_sum << std::setprecision(4) << "  ("
              << r.wall_seconds << " s)" << std::endl;
  });

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"AC1 convergence slope", [&] { return convergence_slope(run); }},
      {"AC2 energy conservation", [&] { return energy_conservation(run); }},
      {"AC3 DtN truncation machinery", truncation_machinery},
      {"AC4 spectral identities", spectral_identities},
      {"AC5 DtN identity on analytic fields", dtn_identity},
      {"AC6 Fourier-trace oracle", fourier_oracle},
      {"AC7 boundary-condition exactness", boundary_exactness},
      {"AC8 solver contracts", [&] { return solver_contracts(run); }},
      {"AC9 mesh audits", mesh_audits},
      {"AC10 estimator audits", [&] { return estimator_audits(run); }},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " exception: " << e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ":" << o.detail.str() << std::endl;
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << "(" << failed << " failing, " << total << " s)" << std::endl;
  return failed ? 1 : 0;
}
