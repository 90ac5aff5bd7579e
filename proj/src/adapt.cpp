#include "eldtn/adapt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include "eldtn/analytic.hpp"

namespace eldtn {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// One mesh of the adaptive history, kept so later iterations can use it as
// a multigrid level.
struct Level {
  std::shared_ptr<const PeriodicTetMesh> mesh;
  DofMap dofs;
  std::unique_ptr<LinearSystem> system;
  std::shared_ptr<const SparseFactor> factor;
};

constexpr double kLevelRatio = 2.5;

BoundarySpectrum trace_spectrum(const LinearSystem& sys, const Eigen::VectorXcd& x) {
  const Eigen::VectorXcd y = sys.dtn.forward(x);
  BoundarySpectrum s;
  s.N = sys.dtn.N();
  s.coeffs.resize(sys.dtn.num_modes());
  for (int m = 0; m < sys.dtn.num_modes(); ++m) s.coeffs[m] = y.segment<3>(3 * m);
  return s;
}

bool has_exact_solution(const AdaptConfig& c) {
  return c.profile.kind() == SurfaceProfile::Kind::flat && c.profile.base() == 0.0;
}

Solution diagnose(const PeriodicTetMesh& mesh, const AdaptConfig& config, const ModeTable<double>& modes,
                  DofMap dofs, const std::vector<CVec3>& lift, const LinearSystem& sys, SolveResult res) {
  const Lattice<double> lattice = config.lattice();
  const double uinc = incident_h1_norm(config.medium, mesh.profile.fluid_volume(mesh.Lambda1, mesh.Lambda2, mesh.h));
  Solution s;
  s.field = make_field(dofs, res.x, lift);
  const BoundarySpectrum trace = trace_spectrum(sys, res.x);
  s.indicators = indicators(mesh, s.field, modes, config.medium, config.incidence, lattice, uinc, config.estimator,
                            &trace);
  s.efficiencies = field_efficiencies(trace, config.medium, config.incidence, lattice);
  if (has_exact_solution(config)) {
    const FlatExactSolution<double> ex = flat_exact(config.medium, config.incidence);
    s.h1_error = h1_error(mesh, s.field, [&](const Vec3& x) { return flat_gradient(ex, x); });
  }
  s.dofs = std::move(dofs);
  s.solve = std::move(res);
  return s;
}

}  // namespace

Lattice<double> AdaptConfig::lattice() const {
  Lattice<double> l;
  l.Lambda1 = Lambda1;
  l.Lambda2 = Lambda2;
  l.h = h;
  l.hhat = hhat.value_or(profile.max_height());
  return l;
}

void validate(const AdaptConfig& c) {
  if (!(c.tau > 0 && c.tau < 1)) throw ConfigError("tau must lie in (0, 1)");
  if (!(c.epsilon >= 0)) throw ConfigError("eps must be nonnegative");
  if (!(c.eps_N_target > 0)) throw ConfigError("eps_N_target must be positive");
  if (c.max_dofs < 1) throw ConfigError("max_dofs must be positive");
  if (c.max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (c.bisections < 1 || c.bisections > 6) throw ConfigError("bisections must lie in 1..6");
  if (c.N && *c.N < 0) throw ConfigError("N must be nonnegative");
  if (c.direct_limit < 1) throw ConfigError("direct_limit must be positive");
  if (!(c.h > c.profile.max_height())) throw ConfigError("h must exceed the surface maximum");
  const Lattice<double> l = c.lattice();
  if (l.hhat < c.profile.max_height() || !(l.hhat < c.h))
    throw ConfigError("hhat must lie between the surface maximum and h");
  validate(l);
}

int choose_N(const Medium<double>& medium, const Incidence<double>& incidence, const Lattice<double>& lattice,
             double eps_N_target, double uinc_h1norm, int max_N) {
  for (int N = 1; N <= max_N; ++N)
    if (truncation_bound(medium, incidence, lattice, N, uinc_h1norm) <= eps_N_target) return N;
  throw ConfigError("choose_N: no N <= " + std::to_string(max_N) +
                    " reaches the truncation target; h - hhat is too small");
}

std::vector<int> mark(const std::vector<double>& eta, double tau) {
  if (eta.empty()) throw InvalidParameter("mark: no indicators");
  const double top = *std::max_element(eta.begin(), eta.end());
  std::vector<int> marked;
  for (int k = 0; k < static_cast<int>(eta.size()); ++k)
    if (eta[k] >= tau * top) marked.push_back(k);
  return marked;
}

EfficiencyTable<double> field_efficiencies(const BoundarySpectrum& trace, const Medium<double>& medium,
                                           const Incidence<double>& incidence, const Lattice<double>& lattice) {
  return efficiencies(medium, incidence, lattice, [&](ModeIndex n) -> CVec3 {
    if (std::abs(n[0]) > trace.N || std::abs(n[1]) > trace.N)
      throw InvalidParameter("field_efficiencies: a propagating mode lies outside the truncated spectrum");
    return trace.at(n);
  });
}

Solution solve_once(const PeriodicTetMesh& mesh, const AdaptConfig& config, const ModeTable<double>& modes) {
  DofMap dofs = build_dofmap(mesh, config.incidence);
  const std::vector<CVec3> lift = dirichlet_lift(mesh, dofs, config.medium, config.incidence);
  const LinearSystem sys = assemble(mesh, dofs, config.medium, config.incidence, modes, lift, config.solver);
  SolveResult res = solve(sys, config.solver);
  return diagnose(mesh, config, modes, std::move(dofs), lift, sys, std::move(res));
}

AdaptResult run(const AdaptConfig& config, const std::function<void(const IterationRecord&)>& on_iteration) {
  validate(config);
  const Lattice<double> lattice = config.lattice();
  auto mesh = std::make_shared<const PeriodicTetMesh>(
      build_mesh(config.profile, config.Lambda1, config.Lambda2, config.h, config.divisions));
  const double uinc = incident_h1_norm(config.medium, mesh->profile.fluid_volume(mesh->Lambda1, mesh->Lambda2, mesh->h));
  AdaptResult out;
  out.N = config.N ? *config.N : choose_N(config.medium, config.incidence, lattice, config.eps_N_target, uinc);
  const ModeTable<double> modes(config.medium, config.incidence, lattice, out.N);

  std::vector<Level> history;
  for (int iter = 0;; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    DofMap dofs = build_dofmap(*mesh, config.incidence);
    const std::vector<CVec3> lift = dirichlet_lift(*mesh, dofs, config.medium, config.incidence);
    Solution sol;
    if (dofs.n_free <= config.direct_limit) {
      const LinearSystem sys = assemble(*mesh, dofs, config.medium, config.incidence, modes, lift, config.solver);
      SolveResult res = solve(sys, config.solver);
      sol = diagnose(*mesh, config, modes, dofs, lift, sys, std::move(res));
    } else {
      // Coarsest level: the latest mesh small enough for a direct solve.
      int coarse = -1;
      for (int j = static_cast<int>(history.size()) - 1; j >= 0 && coarse < 0; --j)
        if (history[j].dofs.n_free <= config.direct_limit) coarse = j;
      if (coarse < 0) throw SolverError("adapt: no mesh in the history is small enough for the coarse solve");
      Level& c = history[coarse];
      if (!c.factor) {
        SolverOptions fold = config.solver;
        fold.path = DtnPath::dense_block;
        c.system = std::make_unique<LinearSystem>(
            assemble(*c.mesh, c.dofs, config.medium, config.incidence, modes,
                     dirichlet_lift(*c.mesh, c.dofs, config.medium, config.incidence), fold));
        c.factor = std::make_shared<const SparseFactor>(c.system->folded);
      }
      std::vector<int> chosen;
      double last = dofs.n_free;
      for (int j = static_cast<int>(history.size()) - 1; j > coarse; --j) {
        const double n = history[j].dofs.n_free;
        if (n * kLevelRatio <= last && n >= kLevelRatio * c.dofs.n_free) {
          chosen.insert(chosen.begin(), j);
          last = n;
        }
      }
      chosen.insert(chosen.begin(), coarse);
      SolverOptions unfolded = config.solver;
      unfolded.path = DtnPath::low_rank;
      for (int j : chosen) {
        Level& l = history[j];
        if (!l.system)
          l.system = std::make_unique<LinearSystem>(
              assemble(*l.mesh, l.dofs, config.medium, config.incidence, modes,
                       dirichlet_lift(*l.mesh, l.dofs, config.medium, config.incidence), unfolded));
      }
      const LinearSystem sys = assemble(*mesh, dofs, config.medium, config.incidence, modes, lift, unfolded);
      std::vector<const LinearSystem*> levels;
      std::vector<SparseMatrixC> prolongations;
      for (std::size_t i = 0; i < chosen.size(); ++i) {
        const Level& l = history[chosen[i]];
        levels.push_back(l.system.get());
        if (i + 1 < chosen.size()) {
          const Level& next = history[chosen[i + 1]];
          prolongations.push_back(prolongation(*l.mesh, l.dofs, *next.mesh, next.dofs));
        } else {
          prolongations.push_back(prolongation(*l.mesh, l.dofs, *mesh, dofs));
        }
      }
      levels.push_back(&sys);
      const MultilevelSolver ml(levels, std::move(prolongations), c.factor, config.iterative);
      SolveResult res = ml.solve();
      sol = diagnose(*mesh, config, modes, dofs, lift, sys, std::move(res));
    }

    IterationRecord rec;
    rec.iter = iter;
    rec.n_dofs = sol.dofs.n_free;
    rec.n_tets = mesh->num_tets();
    rec.N = out.N;
    rec.eps_h = sol.indicators.eps_h;
    rec.eps_N = sol.indicators.eps_N;
    rec.h1_error = sol.h1_error;
    rec.efficiency_sum = sol.efficiencies.sum;
    rec.relative_residual = sol.solve.relative_residual;
    rec.solver_iterations = sol.solve.iterations;
    rec.wall_seconds = seconds_since(t0);
    out.records.push_back(rec);
    if (on_iteration) on_iteration(rec);

    std::string stop;
    if (rec.eps_h <= config.epsilon) {
      out.converged = true;
      stop = "tolerance reached";
    } else if (iter + 1 >= config.max_iters) {
      stop = "max_iters reached";
    } else if (rec.n_dofs >= config.max_dofs) {
      stop = "max_dofs reached";
    }
    if (!stop.empty()) {
      out.stop_reason = stop;
      out.mesh = *mesh;
      out.dofs = std::move(sol.dofs);
      out.field = std::move(sol.field);
      out.indicators = std::move(sol.indicators);
      out.efficiencies = std::move(sol.efficiencies);
      return out;
    }
    const std::vector<int> marked = mark(sol.indicators.eta, config.tau);
    PeriodicTetMesh next = refine(*mesh, marked, config.bisections);
    // Splitting only surface edges adds no unknowns; refine the new
    // elements once more until the free DoF count grows.
    while (build_dofmap(next, config.incidence).n_free <= sol.dofs.n_free) {
      std::vector<int> fresh;
      for (int t = 0; t < next.num_tets(); ++t)
        for (int v : next.tets[t].v)
          if (v >= mesh->num_vertices()) {
            fresh.push_back(t);
            break;
          }
      next = refine(next, fresh);
    }
    auto refined = std::make_shared<const PeriodicTetMesh>(std::move(next));
    history.push_back(Level{mesh, std::move(sol.dofs), nullptr, nullptr});
    mesh = std::move(refined);
  }
}

}  // namespace eldtn
