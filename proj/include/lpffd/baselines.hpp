#pragma once

#include <chrono>

#include "lpffd/arap.hpp"
#include "lpffd/ffd.hpp"
#include "lpffd/solver.hpp"

namespace lpffd {

/// Direct-manipulation FFD: one linear solve of the handle objective without
/// the locality term (lambda_ml = 0), keeping the rest-anchor regularizer.
inline Points hsu_solve(const EmbeddingWeights& W, const HandleSet& handles, const SolverConfig& config,
                        const LatticeGrid& grid) {
  handles.validate(W.rows(), grid.handle_count(), grid.dimension());
  SolverConfig direct = config;
  direct.lambda_ml = 0.0;
  LaplacianMatrix none;
  none.matrix.resize(W.rows(), W.rows());
  const FactoredSystem sys = assemble_system(W, none, handles, direct, grid.dims());
  return sys.solve(handle_rhs(sys, handles, direct, grid.rest()));
}

enum class InverseRegularizer {
  RestAnchor,    // sum_i |P'_i - P0_i|^2
  NohSmoothing,  // sum over lattice edges |(P'_i - P'_j) - (P0_i - P0_j)|^2
};

/// Lattice edge graph Laplacian.
inline Eigen::MatrixXd lattice_laplacian(const LatticeGrid& grid) {
  const int nh = grid.handle_count();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nh, nh);
  for (const auto& e : grid.edges()) {
    G(e[0], e[0]) += 1.0;
    G(e[1], e[1]) += 1.0;
    G(e[0], e[1]) -= 1.0;
    G(e[1], e[0]) -= 1.0;
  }
  return G;
}

inline double regularizer_value(const LatticeGrid& grid, const Points& P, InverseRegularizer reg) {
  const Points diff = P - grid.rest();
  if (reg == InverseRegularizer::RestAnchor) return diff.squaredNorm();
  double sum = 0.0;
  for (const auto& e : grid.edges()) sum += (diff.row(e[0]) - diff.row(e[1])).squaredNorm();
  return sum;
}

/// argmin_P |W P - V_target|^2 + lambda Reg(P).
inline Points inverse_ffd_fit(const EmbeddingWeights& W, const Points& target, InverseRegularizer reg, double lambda,
                              const LatticeGrid& grid) {
  if (W.rows() != target.rows() || W.cols() != grid.handle_count() || target.cols() != grid.dimension())
    throw Error(ErrorCode::DimensionMismatch, "inverse FFD inputs do not match");
  if (lambda < 0.0) throw Error(ErrorCode::InvalidInput, "regularization weight must be nonnegative");
  const Eigen::MatrixXd Wd(W.matrix);
  const Eigen::MatrixXd R = reg == InverseRegularizer::RestAnchor
                                ? Eigen::MatrixXd::Identity(grid.handle_count(), grid.handle_count())
                                : lattice_laplacian(grid);
  Eigen::MatrixXd A = Wd.transpose() * Wd + lambda * R;
  A = 0.5 * (A + A.transpose()).eval();
  const Points rhs = Wd.transpose() * target + lambda * (R * grid.rest());
  return detail::checked_cholesky(A, "inverse FFD system").solve(rhs);
}

struct PipelineOptions {
  DgpOptions dgp;
  InverseRegularizer regularizer = InverseRegularizer::NohSmoothing;
  double lambda = 1e-2;
};

struct PipelineResult {
  Points dgp_vertices;  // first stage, per-vertex ARAP
  Points handles;       // lattice fitted to the first stage
  Points ffd_vertices;  // W P'
  double dgp_ms = 0.0;
  double inverse_ms = 0.0;
};

/// Two-step baseline: ARAP on the mesh, then an inverse FFD fit of the lattice.
inline PipelineResult dgp_inverse_pipeline(const TriMesh& mesh, const LatticeGrid& grid, const EmbeddingWeights& W,
                                           const LaplacianMatrix& L, const HandleSet& handles,
                                           const PipelineOptions& options = {}) {
  if (!handles.grid.empty())
    throw Error(ErrorCode::InvalidInput, "grid handles are not supported by the DGP + inverse FFD pipeline");
  handles.validate(mesh.vertex_count(), grid.handle_count(), mesh.dimension());
  PipelineResult out;
  auto t0 = std::chrono::steady_clock::now();
  out.dgp_vertices = dgp_solve(mesh, L, handles.vertex, options.dgp).vertices;
  out.dgp_ms = detail::ms_since(t0);
  t0 = std::chrono::steady_clock::now();
  out.handles = inverse_ffd_fit(W, out.dgp_vertices, options.regularizer, options.lambda, grid);
  out.inverse_ms = detail::ms_since(t0);
  out.ffd_vertices = forward_ffd(W, out.handles);
  return out;
}

}  // namespace lpffd
