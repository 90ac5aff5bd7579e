#pragma once

#include <memory>
#include <string>
#include <vector>

#include "eldtn/dtn.hpp"
#include "eldtn/fem.hpp"

namespace eldtn {

/// Sparse LU factorization (UMFPACK when available, Eigen's SparseLU
/// otherwise). Reusable for many right-hand sides.
class SparseFactor {
 public:
  explicit SparseFactor(const SparseMatrixC& A);
  ~SparseFactor();
  SparseFactor(SparseFactor&&) noexcept;
  SparseFactor& operator=(SparseFactor&&) noexcept;

  Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const;
  Eigen::MatrixXcd solve(const Eigen::MatrixXcd& B) const;
  static const char* backend();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

enum class DtnPath { automatic, dense_block, low_rank };

struct SolverOptions {
  int dense_threshold = 3000;  // boundary unknowns
  DtnPath path = DtnPath::automatic;
  int block_columns = 48;      // right-hand sides per batch in the bordered solve
};

struct SystemStats {
  long long volume_nonzeros = 0;
  long long matrix_nonzeros = 0;
  int boundary_dofs = 0;
  int rank = 0;
  bool folded = false;
};

/// Discrete system (A_vol + C) x = b, with C the DtN coupling. The dense
/// path folds C into the sparse matrix; the low-rank path keeps it apart.
struct LinearSystem {
  SparseMatrixC volume;
  SparseMatrixC folded;  // empty unless stats.folded
  DtnBlock dtn;
  Eigen::VectorXcd rhs;
  SystemStats stats;

  int size() const { return static_cast<int>(rhs.size()); }
  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
};

LinearSystem assemble(const PeriodicTetMesh& mesh, const DofMap& dofs, const Medium<double>& medium,
                      const Incidence<double>& incidence, const ModeTable<double>& modes,
                      const std::vector<CVec3>& lift, const SolverOptions& options = {});

struct SolveResult {
  Eigen::VectorXcd x;
  double relative_residual = 0.0;
  bool low_rank = false;
  int iterations = 0;  // GMRES iterations; 0 for direct solves
  double factor_seconds = 0.0;
  double total_seconds = 0.0;
};

/// Direct solution; throws SolverError when the factorization fails (an
/// exceptional frequency) or the residual contract of 1e-9 is violated.
SolveResult solve(const LinearSystem& system, const SolverOptions& options = {});

double relative_residual(const LinearSystem& system, const Eigen::VectorXcd& x);

/// Interpolation of quasi-periodic P1 fields from a mesh to one obtained
/// from it by refinement (free unknowns to free unknowns; surface values,
/// which are prescribed, interpolate as zero).
SparseMatrixC prolongation(const PeriodicTetMesh& coarse, const DofMap& coarse_dofs,
                           const PeriodicTetMesh& fine, const DofMap& fine_dofs);

struct IterativeOptions {
  int restart = 50;
  double tolerance = 1e-10;
  int max_iterations = 600;
  int smoothing_steps = 2;
};

/// Restarted GMRES, right-preconditioned by a V-cycle over a hierarchy of
/// nested meshes. Levels run coarse to fine; prolongations[i] maps level i
/// to level i + 1. The coarsest level is solved with a factorization of
/// its complete operator (folded DtN block), computed once by the caller.
class MultilevelSolver {
 public:
  MultilevelSolver(std::vector<const LinearSystem*> levels, std::vector<SparseMatrixC> prolongations,
                   std::shared_ptr<const SparseFactor> coarse_factor, IterativeOptions options = {});

  SolveResult solve() const;
  int last_iterations() const { return iterations_; }

 private:
  Eigen::VectorXcd vcycle(std::size_t level, const Eigen::VectorXcd& b) const;
  void gauss_seidel(std::size_t level, const Eigen::VectorXcd& b, Eigen::VectorXcd& x, bool forward) const;

  std::vector<const LinearSystem*> levels_;
  std::vector<SparseMatrixC> prolongations_;
  std::vector<SparseMatrixC> restrictions_;
  std::vector<Eigen::SparseMatrix<Complex, Eigen::RowMajor>> rows_;
  std::vector<Eigen::VectorXcd> inverse_diagonal_;
  std::shared_ptr<const SparseFactor> coarse_;
  IterativeOptions options_;
  mutable int iterations_ = 0;
};

}  // namespace eldtn
