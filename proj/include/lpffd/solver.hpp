#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "lpffd/arap.hpp"
#include "lpffd/error.hpp"
#include "lpffd/ffd.hpp"
#include "lpffd/geometry.hpp"

namespace lpffd {

/// Which quadratic form measures locality of the embedded mesh.
///  EdgeArap: sum_i sum_j w_ij |(v'_i - v'_j) - R_i (v_i - v_j)|^2 with v' = W P'.
///  LaplacianCoordinates: |L W P' - T L V|^2 (rotated differential coordinates).
enum class LocalityForm { EdgeArap, LaplacianCoordinates };

struct SolverConfig {
  double lambda_ml = 1.0;
  double lambda_mp = 1.0e2;
  double lambda_gp = 1.0e2;
  double lambda_gr = 1.0e-2;
  int max_iterations = 5;
  double rel_tolerance = 1e-6;
  LaplacianMode laplacian_mode = LaplacianMode::Uniform;
  LocalityForm locality = LocalityForm::EdgeArap;

  void validate() const {
    if (lambda_ml < 0 || lambda_mp < 0 || lambda_gp < 0 || lambda_gr < 0)
      throw Error(ErrorCode::InvalidInput, "energy weights must be nonnegative");
    if (max_iterations < 0) throw Error(ErrorCode::InvalidInput, "max_iterations must be nonnegative");
  }
};

struct EnergyTerms {
  double ml = 0, mp = 0, gp = 0, gr = 0, total = 0;
};

/// Identity of an assembled normal matrix. Target positions are not part of
/// it: moving a handle only changes the right-hand side.
struct SystemKey {
  std::vector<int> dims;
  std::vector<int> vertex_ids;
  std::vector<int> grid_ids;
  double lambda_ml = 0, lambda_mp = 0, lambda_gp = 0, lambda_gr = 0;
  LocalityForm locality = LocalityForm::EdgeArap;
  std::uint64_t laplacian_fingerprint = 0;
  std::uint64_t weights_fingerprint = 0;

  bool operator==(const SystemKey&) const = default;
};

/// Normal matrix A of the handle problem and its Cholesky factor.
struct FactoredSystem {
  SystemKey key;
  Eigen::MatrixXd A;
  Eigen::LLT<Eigen::MatrixXd> factor;
  // Dense copies reused by every right-hand side.
  Eigen::MatrixXd weights;         // W (M_v x N_h)
  Eigen::MatrixXd laplacian_weights;  // L W, LaplacianCoordinates form only

  Points solve(const Points& rhs) const { return factor.solve(rhs); }
};

struct Timings {
  double precompute_ms = 0.0;
  std::vector<double> local_ms;   // rotation fitting + right-hand-side assembly
  std::vector<double> global_ms;  // back-substitution against the factor
};

struct SolveResult {
  Points handles;   // P'
  Points vertices;  // V' = W P'
  std::vector<EnergyTerms> energies;  // at the start, then after every iteration
  RotationField solve_rotations;      // T used by the last global step
  Timings timings;
  int iterations = 0;
};

namespace detail {

inline std::vector<int> keys_of(const std::map<int, Eigen::VectorXd>& m) {
  std::vector<int> out;
  out.reserve(m.size());
  for (const auto& kv : m) out.push_back(kv.first);
  return out;
}

inline std::uint64_t fingerprint(const EmbeddingWeights& W) {
  std::uint64_t h = 1469598103934665603ull;
  const int r = W.rows(), c = W.cols();
  h = fnv1a(h, &r, sizeof r);
  h = fnv1a(h, &c, sizeof c);
  h = fnv1a(h, W.matrix.valuePtr(), sizeof(double) * W.matrix.nonZeros());
  return h;
}

inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string describe_null_direction(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  const Eigen::VectorXd v = eig.eigenvectors().col(0);
  std::ostringstream os;
  os << "smallest eigenvalue " << eig.eigenvalues()[0] << "; null direction moves handles";
  int listed = 0;
  for (int i = 0; i < v.size() && listed < 8; ++i)
    if (std::abs(v[i]) > 1e-3) {
      os << ' ' << i;
      ++listed;
    }
  if (listed == 8) os << " ...";
  os << " (set lambda_gr > 0 or constrain these handles)";
  return os.str();
}

// Cholesky of a symmetric matrix that must be positive definite. Pivots at
// rounding level mean a null direction survived the factorization.
inline Eigen::LLT<Eigen::MatrixXd> checked_cholesky(const Eigen::MatrixXd& A, const std::string& what) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  bool ok = llt.info() == Eigen::Success;
  if (ok && A.rows() > 0) {
    const Eigen::VectorXd pivots = Eigen::MatrixXd(llt.matrixL()).diagonal();
    const double floor = 1e-14 * A.diagonal().cwiseAbs().maxCoeff();
    ok = pivots.minCoeff() > 0.0 && pivots.cwiseAbs2().minCoeff() > floor;
  }
  if (!ok) throw Error(ErrorCode::NonPositiveDefinite, what + " is not positive definite: " + describe_null_direction(A));
  return llt;
}

}  // namespace detail

inline SystemKey make_system_key(const EmbeddingWeights& W, const LaplacianMatrix& L, const HandleSet& handles,
                                 const SolverConfig& config, const std::vector<int>& dims) {
  return {dims,
          detail::keys_of(handles.vertex),
          detail::keys_of(handles.grid),
          config.lambda_ml,
          config.lambda_mp,
          config.lambda_gp,
          config.lambda_gr,
          config.locality,
          L.fingerprint,
          detail::fingerprint(W)};
}

/// Builds
///   A = lambda_ml A_ml + lambda_mp sum_{i in C} W_i^T W_i + lambda_gp S_D + lambda_gr S_{not D}
/// with A_ml = 2 W^T L W (EdgeArap) or (LW)^T (LW) (LaplacianCoordinates),
/// and factorizes it once.
inline FactoredSystem assemble_system(const EmbeddingWeights& W, const LaplacianMatrix& L, const HandleSet& handles,
                                      const SolverConfig& config, const std::vector<int>& dims = {}) {
  config.validate();
  const int nv = W.rows(), nh = W.cols();
  if (L.size() != nv) throw Error(ErrorCode::DimensionMismatch, "weights and Laplacian built on different meshes");
  for (const auto& [id, target] : handles.vertex)
    if (id < 0 || id >= nv) throw Error(ErrorCode::UnknownId, "unknown vertex handle id " + std::to_string(id));
  for (const auto& [id, target] : handles.grid)
    if (id < 0 || id >= nh) throw Error(ErrorCode::UnknownId, "unknown grid handle id " + std::to_string(id));

  FactoredSystem sys;
  sys.key = make_system_key(W, L, handles, config, dims);
  sys.weights = Eigen::MatrixXd(W.matrix);
  sys.A = Eigen::MatrixXd::Zero(nh, nh);
  if (config.lambda_ml > 0.0) {
    const Eigen::MatrixXd LW = L.matrix * sys.weights;
    if (config.locality == LocalityForm::EdgeArap) {
      sys.A.noalias() += (2.0 * config.lambda_ml) * (sys.weights.transpose() * LW);
    } else {
      sys.A.noalias() += config.lambda_ml * (LW.transpose() * LW);
      sys.laplacian_weights = LW;
    }
  }
  if (config.locality == LocalityForm::LaplacianCoordinates) {
    if (sys.laplacian_weights.size() == 0) sys.laplacian_weights = L.matrix * sys.weights;
  }
  for (const auto& [id, target] : handles.vertex) {
    const Eigen::RowVectorXd w = sys.weights.row(id);
    sys.A.noalias() += config.lambda_mp * (w.transpose() * w);
  }
  for (int h = 0; h < nh; ++h) sys.A(h, h) += handles.grid.count(h) ? config.lambda_gp : config.lambda_gr;
  sys.A = 0.5 * (sys.A + sys.A.transpose()).eval();

  sys.factor = detail::checked_cholesky(sys.A, "handle system");
  return sys;
}

/// Holds the factorization for one session; reassembles only when the key changes.
class SystemCache {
 public:
  const FactoredSystem& get(const EmbeddingWeights& W, const LaplacianMatrix& L, const HandleSet& handles,
                            const SolverConfig& config, const std::vector<int>& dims) {
    SystemKey key = make_system_key(W, L, handles, config, dims);
    if (system_ && system_->key == key) {
      ++hits_;
      return *system_;
    }
    ++misses_;
    system_ = assemble_system(W, L, handles, config, dims);
    return *system_;
  }

  int hits() const { return hits_; }
  int misses() const { return misses_; }
  void clear() { system_.reset(); }

 private:
  std::optional<FactoredSystem> system_;
  int hits_ = 0;
  int misses_ = 0;
};

/// Per-term energies at handle positions P with the given rotations.
inline EnergyTerms energy_with_rotations(const TriMesh& mesh, const EmbeddingWeights& W, const LaplacianMatrix& L,
                                         const HandleSet& handles, const SolverConfig& config, const Points& rest_handles,
                                         const Points& P, const RotationField& R) {
  EnergyTerms e;
  const Points Vd = forward_ffd(W, P);
  const Points& V = mesh.vertices();
  if (config.locality == LocalityForm::EdgeArap) {
    e.ml = arap_energy(mesh, L, V, Vd, R);
  } else {
    const Points delta = L.matrix * V;
    const Points deformed = L.matrix * Vd;
    for (int i = 0; i < mesh.vertex_count(); ++i)
      e.ml += (deformed.row(i).transpose() - R.at(i) * delta.row(i).transpose()).squaredNorm();
  }
  for (const auto& [id, target] : handles.vertex) e.mp += (Vd.row(id).transpose() - target).squaredNorm();
  for (int h = 0; h < P.rows(); ++h) {
    auto it = handles.grid.find(h);
    if (it != handles.grid.end()) e.gp += (P.row(h).transpose() - it->second).squaredNorm();
    else e.gr += (P.row(h) - rest_handles.row(h)).squaredNorm();
  }
  e.total = config.lambda_ml * e.ml + config.lambda_mp * e.mp + config.lambda_gp * e.gp + config.lambda_gr * e.gr;
  return e;
}

/// Per-term energies with the best-fitting rotations for P.
inline EnergyTerms energy_eval(const TriMesh& mesh, const EmbeddingWeights& W, const LaplacianMatrix& L,
                               const HandleSet& handles, const SolverConfig& config, const Points& rest_handles,
                               const Points& P) {
  const RotationField R = fit_rotations(mesh, L, mesh.vertices(), forward_ffd(W, P));
  return energy_with_rotations(mesh, W, L, handles, config, rest_handles, P, R);
}

/// Constraint part of the right-hand side (vertex, grid and rest-anchor terms).
inline Points handle_rhs(const FactoredSystem& sys, const HandleSet& handles, const SolverConfig& config,
                         const Points& rest_handles) {
  const int nh = static_cast<int>(sys.A.rows());
  Points rhs = Points::Zero(nh, rest_handles.cols());
  for (const auto& [id, target] : handles.vertex)
    rhs.noalias() += config.lambda_mp * (sys.weights.row(id).transpose() * target.transpose());
  for (int h = 0; h < nh; ++h) {
    auto it = handles.grid.find(h);
    if (it != handles.grid.end()) rhs.row(h) += config.lambda_gp * it->second.transpose();
    else rhs.row(h) += config.lambda_gr * rest_handles.row(h);
  }
  return rhs;
}

/// Right-hand side of A P' = rhs for fixed rotations.
inline Points assemble_rhs(const FactoredSystem& sys, const TriMesh& mesh, const LaplacianMatrix& L,
                           const HandleSet& handles, const SolverConfig& config, const Points& rest_handles,
                           const RotationField& R) {
  Points rhs = handle_rhs(sys, handles, config, rest_handles);
  if (config.lambda_ml > 0.0) {
    const int d = mesh.dimension();
    if (config.locality == LocalityForm::EdgeArap) {
      const Points b = arap_rhs(mesh, L, mesh.vertices(), R);
      rhs.noalias() += config.lambda_ml * (sys.weights.transpose() * b);
    } else {
      const Points delta = L.matrix * mesh.vertices();
      Points rotated(mesh.vertex_count(), d);
      for (int i = 0; i < mesh.vertex_count(); ++i) rotated.row(i) = (R.at(i) * delta.row(i).transpose()).transpose();
      rhs.noalias() += config.lambda_ml * (sys.laplacian_weights.transpose() * rotated);
    }
  }
  return rhs;
}

/// Local/global minimization of the weighted handle objective over P'.
/// `warm_start` seeds P' (defaults to the rest lattice); `cache` keeps the
/// factorization across calls with unchanged handle id-sets.
inline SolveResult lp_ffd_solve(const TriMesh& mesh, const LatticeGrid& grid, const EmbeddingWeights& W,
                                const LaplacianMatrix& L, const HandleSet& handles, const SolverConfig& config,
                                const Points* warm_start = nullptr, SystemCache* cache = nullptr) {
  config.validate();
  handles.validate(mesh.vertex_count(), grid.handle_count(), mesh.dimension());
  if (W.rows() != mesh.vertex_count() || W.cols() != grid.handle_count())
    throw Error(ErrorCode::DimensionMismatch, "weight matrix does not match mesh and grid");

  SolveResult result;
  auto t0 = std::chrono::steady_clock::now();
  std::optional<FactoredSystem> local_system;
  const FactoredSystem* sys = nullptr;
  if (cache) {
    sys = &cache->get(W, L, handles, config, grid.dims());
  } else {
    local_system = assemble_system(W, L, handles, config, grid.dims());
    sys = &*local_system;
  }
  result.timings.precompute_ms = detail::ms_since(t0);

  const Points& rest_handles = grid.rest();
  Points P = warm_start ? *warm_start : rest_handles;
  if (P.rows() != grid.handle_count() || P.cols() != grid.dimension())
    throw Error(ErrorCode::DimensionMismatch, "warm start has the wrong shape");

  RotationField R = fit_rotations(mesh, L, mesh.vertices(), forward_ffd(W, P));
  EnergyTerms energy = energy_with_rotations(mesh, W, L, handles, config, rest_handles, P, R);
  result.energies.push_back(energy);
  result.solve_rotations = R;

  for (int it = 0; it < config.max_iterations; ++it) {
    auto t_local = std::chrono::steady_clock::now();
    const Points rhs = assemble_rhs(*sys, mesh, L, handles, config, rest_handles, R);
    double local_ms = detail::ms_since(t_local);

    auto t_global = std::chrono::steady_clock::now();
    P = sys->solve(rhs);
    result.timings.global_ms.push_back(detail::ms_since(t_global));

    for (int h = 0; h < P.rows(); ++h)
      if (!P.row(h).allFinite())
        throw Error(ErrorCode::NumericalFailure, "non-finite position for grid handle " + std::to_string(h));

    t_local = std::chrono::steady_clock::now();
    result.solve_rotations = R;
    R = fit_rotations(mesh, L, mesh.vertices(), forward_ffd(W, P));
    const EnergyTerms next = energy_with_rotations(mesh, W, L, handles, config, rest_handles, P, R);
    local_ms += detail::ms_since(t_local);
    result.timings.local_ms.push_back(local_ms);

    result.energies.push_back(next);
    result.iterations = it + 1;
    const double change = std::abs(energy.total - next.total) / std::max(energy.total, 1e-300);
    energy = next;
    if (change < config.rel_tolerance) break;
  }
  result.handles = std::move(P);
  result.vertices = forward_ffd(W, result.handles);
  return result;
}

}  // namespace lpffd
