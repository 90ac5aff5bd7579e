#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "eldtn/estimator.hpp"
#include "eldtn/fem.hpp"
#include "eldtn/mesh.hpp"
#include "eldtn/solver.hpp"
#include "eldtn/spectral.hpp"

namespace eldtn {

struct AdaptConfig {
  Medium<double> medium;
  Incidence<double> incidence;
  SurfaceProfile profile = SurfaceProfile::flat(0.0);
  double Lambda1 = 1.0;
  double Lambda2 = 1.0;
  double h = 1.0;
  std::optional<double> hhat;  // defaults to the profile maximum
  Divisions divisions;

  double epsilon = 0.0;  // target for eps_h
  double tau = 0.5;
  int bisections = 3;  // per marked tet and iteration
  double eps_N_target = 1e-8;
  std::optional<int> N;  // chosen from eps_N_target unless set
  long long max_dofs = 300000;
  int max_iters = 30;

  SolverOptions solver;
  // Systems with more unknowns than this use the multilevel iterative solver.
  int direct_limit = 12000;
  IterativeOptions iterative;
  EstimatorOptions estimator;

  Lattice<double> lattice() const;
};

void validate(const AdaptConfig& config);

struct IterationRecord {
  int iter = 0;
  int n_dofs = 0;
  int n_tets = 0;
  int N = 0;
  double eps_h = 0.0;
  double eps_N = 0.0;
  std::optional<double> h1_error;
  double efficiency_sum = 0.0;
  double wall_seconds = 0.0;
  double relative_residual = 0.0;
  int solver_iterations = 0;
};

struct AdaptResult {
  std::vector<IterationRecord> records;
  PeriodicTetMesh mesh;
  DofMap dofs;
  Field field;
  Indicators indicators;
  EfficiencyTable<double> efficiencies;
  int N = 0;
  bool converged = false;      // eps_h <= epsilon
  std::string stop_reason;
};

/// Smallest N >= 1 whose truncation bound is at most the target; throws
/// ConfigError past max_N.
int choose_N(const Medium<double>& medium, const Incidence<double>& incidence, const Lattice<double>& lattice,
             double eps_N_target, double uinc_h1norm, int max_N = 10000);

/// Maximum strategy with a non-strict threshold: {K : eta_K >= tau max eta}.
std::vector<int> mark(const std::vector<double>& eta, double tau);

/// One discrete solve on a mesh, with its diagnostics.
struct Solution {
  DofMap dofs;
  Field field;
  Indicators indicators;
  EfficiencyTable<double> efficiencies;
  SolveResult solve;
  std::optional<double> h1_error;
};

/// Efficiencies of the reflected modes computed from the discrete trace.
EfficiencyTable<double> field_efficiencies(const BoundarySpectrum& trace, const Medium<double>& medium,
                                           const Incidence<double>& incidence, const Lattice<double>& lattice);

/// Assemble, solve directly, and estimate on a single mesh.
Solution solve_once(const PeriodicTetMesh& mesh, const AdaptConfig& config, const ModeTable<double>& modes);

/// The adaptive loop: solve, estimate, mark, refine until eps_h <= epsilon
/// or a budget is reached. The callback sees every record as it is produced.
AdaptResult run(const AdaptConfig& config,
                const std::function<void(const IterationRecord&)>& on_iteration = {});

}  // namespace eldtn
