#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "eldtn/adapt.hpp"
#include "eldtn/analytic.hpp"

namespace eldtn {
namespace {

using std::numbers::pi;

AdaptConfig flat_case() {
  AdaptConfig c;
  c.medium = make_medium(1.0, 1.0, 2 * pi);
  c.incidence = make_incidence(c.medium, pi / 6, pi / 6);
  c.h = 0.3;
  c.divisions = {4, 4, 2};
  return c;
}

AdaptConfig bumps_case() {
  AdaptConfig c;
  c.medium = make_medium(2.0, 1.0, pi);
  c.incidence = make_incidence(c.medium, pi / 3, 0.0);
  c.profile = SurfaceProfile::bumps(0.0, {{0.25, 0.5, 0.25, 0.5, 0.2}, {0.5, 0.75, 0.5, 0.75, 0.2}});
  c.h = 0.6;
  c.divisions = {4, 4, 3};
  return c;
}

TEST(ChooseN, MatchesBruteForceScan) {
  std::mt19937 rng(131);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Medium<double> med = make_medium(0.5 + 2 * u(rng), 0.5 + u(rng), 2 + 8 * u(rng));
    const Incidence<double> inc = make_incidence(med, 1.2 * u(rng), 2 * pi * u(rng));
    const Lattice<double> lattice{0.8 + 0.5 * u(rng), 0.8 + 0.5 * u(rng), 1.0, 0.5 + 0.45 * u(rng)};
    const double target = std::pow(10.0, -2 - 8 * u(rng));
    const int N = choose_N(med, inc, lattice, target, 1.0);
    int brute = 1;
    while (truncation_bound(med, inc, lattice, brute, 1.0) > target) ++brute;
    EXPECT_EQ(N, brute) << "trial " << trial;
  }
}

TEST(ChooseN, LooseTargetAndMonotoneInGap) {
  const AdaptConfig c = flat_case();
  Lattice<double> l = c.lattice();
  EXPECT_EQ(choose_N(c.medium, c.incidence, l, std::numeric_limits<double>::infinity(), 1.0), 1);
  int prev = std::numeric_limits<int>::max();
  for (double hhat : {0.25, 0.2, 0.1, 0.0}) {
    l.hhat = hhat;
    const int N = choose_N(c.medium, c.incidence, l, 1e-8, 1.0);
    EXPECT_LE(N, prev);
    prev = N;
  }
}

TEST(ChooseN, UnreachableTargetIsAConfigError) {
  const AdaptConfig c = flat_case();
  Lattice<double> l = c.lattice();
  l.hhat = 0.299;
  EXPECT_THROW(choose_N(c.medium, c.incidence, l, 1e-12, 1.0, 50), ConfigError);
}

TEST(Mark, MaximumStrategyWithTies) {
  EXPECT_EQ(mark({1.0, 0.5, 0.49, 0.8}, 0.5), (std::vector<int>{0, 1, 3}));
  EXPECT_EQ(mark({2.0, 2.0, 1.0}, 0.99), (std::vector<int>{0, 1}));
  EXPECT_EQ(mark({3.0}, 0.9), (std::vector<int>{0}));
  EXPECT_THROW(mark({}, 0.5), InvalidParameter);
}

TEST(Validate, RejectsInconsistentConfigurations) {
  auto expect_bad = [](auto&& edit) {
    AdaptConfig c = flat_case();
    edit(c);
    EXPECT_THROW(validate(c), ConfigError);
  };
  EXPECT_NO_THROW(validate(flat_case()));
  expect_bad([](AdaptConfig& c) { c.tau = 1.0; });
  expect_bad([](AdaptConfig& c) { c.tau = 0.0; });
  expect_bad([](AdaptConfig& c) { c.epsilon = -1.0; });
  expect_bad([](AdaptConfig& c) { c.max_iters = 0; });
  expect_bad([](AdaptConfig& c) { c.max_dofs = 0; });
  expect_bad([](AdaptConfig& c) { c.hhat = 0.3; });
  expect_bad([](AdaptConfig& c) { c.bisections = 0; });
  expect_bad([](AdaptConfig& c) { c.N = -1; });
  expect_bad([](AdaptConfig& c) {
    c.profile = SurfaceProfile::bumps(0.0, {{0.25, 0.5, 0.25, 0.5, 0.4}});
  });
}

TEST(FieldEfficiencies, RequiresEveryPropagatingMode) {
  const AdaptConfig c = flat_case();
  BoundarySpectrum s;
  s.N = 0;
  s.coeffs = {CVec3::Zero()};
  // At omega = 2 pi several reflected orders besides n = 0 propagate.
  EXPECT_THROW(field_efficiencies(s, c.medium, c.incidence, c.lattice()), InvalidParameter);
}

TEST(Run, LooseToleranceStopsAfterOneSolve) {
  AdaptConfig c = flat_case();
  c.epsilon = 1e6;
  const AdaptResult r = run(c);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.stop_reason, "tolerance reached");
  EXPECT_EQ(r.field.nodal.size(), static_cast<std::size_t>(r.mesh.num_vertices()));
  EXPECT_EQ(r.indicators.eta.size(), static_cast<std::size_t>(r.mesh.num_tets()));
}

TEST(Run, IterationBudget) {
  AdaptConfig c = flat_case();
  c.max_iters = 1;
  const AdaptResult r = run(c);
  EXPECT_EQ(r.records.size(), 1u);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.stop_reason, "max_iters reached");
}

TEST(Run, FlatRunRefinesAndReducesTheError) {
  AdaptConfig c = flat_case();
  c.max_dofs = 20000;
  std::vector<IterationRecord> seen;
  const AdaptResult r = run(c, [&](const IterationRecord& rec) { seen.push_back(rec); });
  ASSERT_GE(r.records.size(), 3u);
  EXPECT_EQ(seen.size(), r.records.size());
  EXPECT_EQ(r.stop_reason, "max_dofs reached");
  EXPECT_GE(r.records.back().n_dofs, c.max_dofs);
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const IterationRecord& rec = r.records[i];
    EXPECT_EQ(rec.iter, static_cast<int>(i));
    EXPECT_EQ(rec.N, r.N);
    EXPECT_LE(rec.relative_residual, 1e-9);
    EXPECT_LE(rec.eps_N, c.eps_N_target);
    ASSERT_TRUE(rec.h1_error.has_value());
    EXPECT_GT(*rec.h1_error / rec.eps_h, 0.01);
    EXPECT_LT(*rec.h1_error / rec.eps_h, 100.0);
    if (i > 0) {
      EXPECT_GT(rec.n_dofs, r.records[i - 1].n_dofs);
      EXPECT_LT(*rec.h1_error, *r.records[i - 1].h1_error);
      EXPECT_LT(rec.eps_h, r.records[i - 1].eps_h);
    }
  }
  EXPECT_NEAR(r.efficiencies.sum, 1.0, 1e-2);
  EXPECT_EQ(r.records.back().n_dofs, r.dofs.n_free);
}

TEST(Run, IterativeSolverPathMatchesTheDirectPath) {
  AdaptConfig c = flat_case();
  c.max_iters = 3;
  const AdaptResult direct = run(c);
  c.direct_limit = 200;
  const AdaptResult iter = run(c);
  ASSERT_EQ(direct.records.size(), iter.records.size());
  EXPECT_GT(iter.records.back().solver_iterations, 0);
  EXPECT_EQ(direct.records.back().solver_iterations, 0);
  for (std::size_t i = 0; i < direct.records.size(); ++i) {
    EXPECT_EQ(direct.records[i].n_dofs, iter.records[i].n_dofs);
    EXPECT_NEAR(direct.records[i].eps_h, iter.records[i].eps_h, 1e-7 * direct.records[i].eps_h);
    EXPECT_NEAR(*direct.records[i].h1_error, *iter.records[i].h1_error, 1e-7);
  }
}

TEST(Run, BumpsRunConcentratesRefinement) {
  AdaptConfig c = bumps_case();
  c.max_iters = 3;
  c.tau = 0.7;
  const AdaptResult r = run(c);
  ASSERT_EQ(r.records.size(), 3u);
  for (const IterationRecord& rec : r.records) {
    EXPECT_FALSE(rec.h1_error.has_value());
    EXPECT_LE(rec.relative_residual, 1e-9);
  }
  EXPECT_GT(r.records[2].n_dofs, r.records[1].n_dofs);
  // Not everything is refined: generations differ across the final mesh.
  int lo = 1 << 30, hi = 0;
  for (const Tet& t : r.mesh.tets) {
    lo = std::min(lo, t.generation);
    hi = std::max(hi, t.generation);
  }
  EXPECT_LT(lo, hi);
  EXPECT_NEAR(r.efficiencies.sum, 1.0, 5e-2);
}

}  // namespace
}  // namespace eldtn
