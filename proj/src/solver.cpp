#include "eldtn/solver.hpp"

#include <chrono>
#include <map>
#include <sstream>

#include <Eigen/SparseLU>
#ifdef ELDTN_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

namespace eldtn {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

struct SparseFactor::Impl {
#ifdef ELDTN_HAVE_UMFPACK
  Eigen::UmfPackLU<SparseMatrixC> lu;
#else
  Eigen::SparseLU<SparseMatrixC, Eigen::COLAMDOrdering<int>> lu;
#endif
};

SparseFactor::SparseFactor(const SparseMatrixC& A) : impl_(std::make_unique<Impl>()) {
  if (A.rows() != A.cols()) throw SolverError("SparseFactor: matrix is not square");
#ifdef ELDTN_HAVE_UMFPACK
  // The pattern is symmetric; nested dissection keeps 3D fill manageable.
  impl_->lu.umfpackControl()(UMFPACK_STRATEGY) = UMFPACK_STRATEGY_SYMMETRIC;
  impl_->lu.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_METIS;
  impl_->lu.umfpackControl()(UMFPACK_IRSTEP) = 0;
#endif
  impl_->lu.compute(A);
  if (impl_->lu.info() != Eigen::Success)
    throw SolverError("sparse LU factorization failed: the matrix is singular or numerically singular "
                      "(possibly an exceptional frequency)");
}

SparseFactor::~SparseFactor() = default;
SparseFactor::SparseFactor(SparseFactor&&) noexcept = default;
SparseFactor& SparseFactor::operator=(SparseFactor&&) noexcept = default;

Eigen::VectorXcd SparseFactor::solve(const Eigen::VectorXcd& b) const {
  Eigen::VectorXcd x = impl_->lu.solve(b);
  if (impl_->lu.info() != Eigen::Success) throw SolverError("sparse LU solve failed");
  return x;
}

Eigen::MatrixXcd SparseFactor::solve(const Eigen::MatrixXcd& B) const {
  Eigen::MatrixXcd X = impl_->lu.solve(B);
  if (impl_->lu.info() != Eigen::Success) throw SolverError("sparse LU solve failed");
  return X;
}

const char* SparseFactor::backend() {
#ifdef ELDTN_HAVE_UMFPACK
  return "umfpack";
#else
  return "eigen-sparselu";
#endif
}

Eigen::VectorXcd LinearSystem::apply(const Eigen::VectorXcd& x) const {
  return volume * x + dtn.apply(x);
}

LinearSystem assemble(const PeriodicTetMesh& mesh, const DofMap& dofs, const Medium<double>& medium,
                      const Incidence<double>& incidence, const ModeTable<double>& modes,
                      const std::vector<CVec3>& lift, const SolverOptions& options) {
  LinearSystem sys;
  VolumeSystem vol = assemble_volume(mesh, dofs, medium, lift);
  sys.volume = std::move(vol.A);
  sys.rhs = std::move(vol.rhs);
  sys.dtn = DtnBlock(mesh, dofs, modes, incidence, options.dense_threshold);
  sys.stats.volume_nonzeros = sys.volume.nonZeros();
  sys.stats.boundary_dofs = sys.dtn.num_boundary_dofs();
  sys.stats.rank = sys.dtn.rank();

  bool fold = sys.dtn.representation() == DtnBlock::Representation::dense_block;
  if (options.path == DtnPath::dense_block) fold = true;
  if (options.path == DtnPath::low_rank) fold = false;
  sys.stats.folded = fold;
  if (fold) {
    const Eigen::MatrixXcd D = sys.dtn.dense();
    const auto& nodes = sys.dtn.nodes();
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(sys.volume.nonZeros() + D.size());
    for (int k = 0; k < sys.volume.outerSize(); ++k)
      for (SparseMatrixC::InnerIterator it(sys.volume, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    for (std::size_t j = 0; j < nodes.size(); ++j)
      for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < nodes.size(); ++i)
          for (int d = 0; d < 3; ++d)
            trip.emplace_back(3 * nodes[i] + d, 3 * nodes[j] + c, D(3 * i + d, 3 * j + c));
    sys.folded.resize(sys.size(), sys.size());
    sys.folded.setFromTriplets(trip.begin(), trip.end());
    sys.stats.matrix_nonzeros = sys.folded.nonZeros();
  } else {
    sys.stats.matrix_nonzeros = sys.volume.nonZeros();
  }
  return sys;
}

double relative_residual(const LinearSystem& system, const Eigen::VectorXcd& x) {
  const double nb = system.rhs.norm();
  const double nr = (system.apply(x) - system.rhs).norm();
  if (nb == 0.0) return nr;
  return nr / nb;
}

SolveResult solve(const LinearSystem& system, const SolverOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult out;
  out.low_rank = !system.stats.folded;
  if (system.rhs.norm() == 0.0) {
    out.x = Eigen::VectorXcd::Zero(system.size());
    return out;
  }
  if (system.stats.folded) {
    const SparseFactor lu(system.folded);
    out.factor_seconds = seconds_since(t0);
    out.x = lu.solve(system.rhs);
  } else {
    // Bordered system by block elimination: with C = U G V (U = B^H, V = B),
    // (I + G V A^{-1} U) w = G V A^{-1} b and x = A^{-1} (b - U w).
    const SparseFactor lu(system.volume);
    out.factor_seconds = seconds_since(t0);
    const DtnBlock& dtn = system.dtn;
    const int r = dtn.rank();
    Eigen::MatrixXcd S(r, r);
    const int chunk = std::max(1, options.block_columns);
    for (int j0 = 0; j0 < r; j0 += chunk) {
      const int nc = std::min(chunk, r - j0);
      Eigen::MatrixXcd Ucols(system.size(), nc);
      for (int j = 0; j < nc; ++j) Ucols.col(j) = dtn.adjoint(Eigen::VectorXcd::Unit(r, j0 + j));
      const Eigen::MatrixXcd Z = lu.solve(Ucols);
      for (int j = 0; j < nc; ++j) S.col(j0 + j) = dtn.forward(Z.col(j));
    }
    Eigen::MatrixXcd K = Eigen::MatrixXcd::Identity(r, r);
    for (int j = 0; j < r; ++j) K.col(j) += dtn.apply_weights(S.col(j));
    const Eigen::VectorXcd y = lu.solve(system.rhs);
    const Eigen::VectorXcd w = K.partialPivLu().solve(dtn.apply_weights(dtn.forward(y)));
    out.x = lu.solve(Eigen::VectorXcd(system.rhs - dtn.adjoint(w)));
  }
  out.relative_residual = relative_residual(system, out.x);
  out.total_seconds = seconds_since(t0);
  if (!std::isfinite(out.relative_residual) || out.relative_residual > 1e-9) {
    std::ostringstream msg;
    msg << "solve: relative residual " << out.relative_residual << " exceeds 1e-9";
    throw SolverError(msg.str());
  }
  return out;
}

SparseMatrixC prolongation(const PeriodicTetMesh& coarse, const DofMap& coarse_dofs,
                           const PeriodicTetMesh& fine, const DofMap& fine_dofs) {
  const int nc = coarse.num_vertices(), nf = fine.num_vertices();
  if (nf < nc || static_cast<int>(fine.vertex_parents.size()) != nf)
    throw InvalidParameter("prolongation: fine mesh is not a refinement of the coarse mesh");
  // Each fine vertex value as a combination of coarse nodes (shared by all
  // three components).
  using Combination = std::map<int, Complex>;
  std::vector<Combination> rep(nf);
  for (int v = 0; v < nc; ++v)
    if (!coarse_dofs.dirichlet[v]) rep[v][coarse_dofs.node[v]] = coarse_dofs.phase[v];
  for (int v = nc; v < nf; ++v) {
    const auto [a, b] = fine.vertex_parents[v];
    if (a < 0 || a >= v || b < 0 || b >= v)
      throw InvalidParameter("prolongation: vertex " + std::to_string(v) + " has no parent edge");
    for (const auto* parent : {&rep[a], &rep[b]})
      for (const auto& [node, w] : *parent) rep[v][node] += 0.5 * w;
  }
  std::vector<Eigen::Triplet<Complex>> trip;
  for (int v = 0; v < nf; ++v) {
    if (fine_dofs.dirichlet[v] || fine_dofs.master[v] != v) continue;
    const int k = fine_dofs.node[v];
    for (const auto& [node, w] : rep[v])
      if (w != Complex(0.0))
        for (int c = 0; c < 3; ++c) trip.emplace_back(3 * k + c, 3 * node + c, w);
  }
  SparseMatrixC P(fine_dofs.n_free, coarse_dofs.n_free);
  P.setFromTriplets(trip.begin(), trip.end());
  return P;
}

MultilevelSolver::MultilevelSolver(std::vector<const LinearSystem*> levels,
                                   std::vector<SparseMatrixC> prolongations,
                                   std::shared_ptr<const SparseFactor> coarse_factor, IterativeOptions options)
    : levels_(std::move(levels)),
      prolongations_(std::move(prolongations)),
      coarse_(std::move(coarse_factor)),
      options_(options) {
  if (levels_.empty() || !coarse_) throw InvalidParameter("MultilevelSolver: empty hierarchy");
  if (prolongations_.size() + 1 != levels_.size())
    throw InvalidParameter("MultilevelSolver: need one prolongation per pair of levels");
  for (std::size_t l = 0; l + 1 < levels_.size(); ++l)
    if (prolongations_[l].cols() != levels_[l]->size() || prolongations_[l].rows() != levels_[l + 1]->size())
      throw InvalidParameter("MultilevelSolver: prolongation " + std::to_string(l) + " has the wrong shape");
  if (options_.restart < 1 || options_.max_iterations < 1 || !(options_.tolerance > 0))
    throw InvalidParameter("MultilevelSolver: invalid iteration options");
  for (const auto& P : prolongations_) restrictions_.push_back(P.adjoint());
  rows_.resize(levels_.size());
  inverse_diagonal_.resize(levels_.size());
  for (std::size_t l = 1; l < levels_.size(); ++l) {
    rows_[l] = levels_[l]->volume;
    rows_[l].makeCompressed();
    Eigen::VectorXcd d = rows_[l].diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (d(i) == Complex(0.0)) throw SolverError("MultilevelSolver: zero diagonal entry in the smoother");
      d(i) = 1.0 / d(i);
    }
    inverse_diagonal_[l] = std::move(d);
  }
}

void MultilevelSolver::gauss_seidel(std::size_t level, const Eigen::VectorXcd& b, Eigen::VectorXcd& x,
                                    bool forward) const {
  const auto& A = rows_[level];
  const Eigen::VectorXcd& dinv = inverse_diagonal_[level];
  const int n = static_cast<int>(A.rows());
  const int* outer = A.outerIndexPtr();
  const int* inner = A.innerIndexPtr();
  const Complex* val = A.valuePtr();
  for (int s = 0; s < n; ++s) {
    const int i = forward ? s : n - 1 - s;
    Complex acc = b(i);
    for (int p = outer[i]; p < outer[i + 1]; ++p)
      if (inner[p] != i) acc -= val[p] * x(inner[p]);
    x(i) = acc * dinv(i);
  }
}

Eigen::VectorXcd MultilevelSolver::vcycle(std::size_t level, const Eigen::VectorXcd& b) const {
  if (level == 0) return coarse_->solve(b);
  const LinearSystem& sys = *levels_[level];
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(b.size());
  for (int k = 0; k < options_.smoothing_steps; ++k) {
    gauss_seidel(level, b, x, true);
    gauss_seidel(level, b, x, false);
  }
  const Eigen::VectorXcd r = b - sys.apply(x);
  const Eigen::VectorXcd rc = restrictions_[level - 1] * r;
  x += prolongations_[level - 1] * vcycle(level - 1, rc);
  for (int k = 0; k < options_.smoothing_steps; ++k) {
    gauss_seidel(level, b, x, true);
    gauss_seidel(level, b, x, false);
  }
  return x;
}

SolveResult MultilevelSolver::solve() const {
  const auto t0 = std::chrono::steady_clock::now();
  const LinearSystem& sys = *levels_.back();
  const std::size_t top = levels_.size() - 1;
  SolveResult out;
  out.low_rank = !sys.stats.folded;
  const Eigen::VectorXcd& b = sys.rhs;
  const int n = sys.size();
  const double nb = b.norm();
  out.x = Eigen::VectorXcd::Zero(n);
  iterations_ = 0;
  if (nb == 0.0) return out;

  // Right-preconditioned GMRES(m) with modified Gram-Schmidt and Givens rotations.
  const int m = options_.restart;
  Eigen::MatrixXcd V(n, m + 1);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
  Eigen::VectorXcd cs(m), snc(m), g(m + 1);
  Eigen::VectorXcd r = b;
  double rnorm = nb;
  while (iterations_ < options_.max_iterations && rnorm > options_.tolerance * nb) {
    V.col(0) = r / rnorm;
    g.setZero();
    g(0) = rnorm;
    int j = 0;
    for (; j < m && iterations_ < options_.max_iterations; ++j) {
      ++iterations_;
      Eigen::VectorXcd w = sys.apply(vcycle(top, V.col(j)));
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V.col(i).dot(w);
        w -= H(i, j) * V.col(i);
      }
      H(j + 1, j) = w.norm();
      if (std::abs(H(j + 1, j)) > 0) V.col(j + 1) = w / H(j + 1, j);
      for (int i = 0; i < j; ++i) {
        const Complex t = std::conj(cs(i)) * H(i, j) + std::conj(snc(i)) * H(i + 1, j);
        H(i + 1, j) = -snc(i) * H(i, j) + cs(i) * H(i + 1, j);
        H(i, j) = t;
      }
      const double hn = std::hypot(std::abs(H(j, j)), std::abs(H(j + 1, j)));
      if (hn == 0.0) throw SolverError("GMRES breakdown");
      cs(j) = H(j, j) / hn;
      snc(j) = H(j + 1, j) / hn;
      H(j, j) = hn;
      H(j + 1, j) = 0.0;
      g(j + 1) = -snc(j) * g(j);
      g(j) = std::conj(cs(j)) * g(j);
      if (std::abs(g(j + 1)) <= options_.tolerance * nb) {
        ++j;
        break;
      }
    }
    const Eigen::VectorXcd y =
        H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    out.x += vcycle(top, V.leftCols(j) * y);
    r = b - sys.apply(out.x);
    rnorm = r.norm();
  }
  out.iterations = iterations_;
  out.relative_residual = rnorm / nb;
  out.total_seconds = seconds_since(t0);
  if (!std::isfinite(out.relative_residual) || out.relative_residual > 1e-9) {
    std::ostringstream msg;
    msg << "multilevel GMRES: relative residual " << out.relative_residual << " exceeds 1e-9 after "
        << iterations_ << " iterations";
    throw SolverError(msg.str());
  }
  return out;
}

}  // namespace eldtn
