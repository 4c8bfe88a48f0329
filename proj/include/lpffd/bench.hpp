#pragma once

#include <algorithm>
#include <chrono>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lpffd/baselines.hpp"
#include "lpffd/scenario.hpp"
#include "lpffd/solver.hpp"

namespace lpffd {

/// Median wall times in milliseconds for one (scene, grid) pair.
struct BenchRow {
  std::string scene;
  int vertices = 0;
  std::vector<int> dims;
  int repeats = 0;
  double lpffd_full_ms = 0;         // embed + W + L + assemble + iterate
  double lpffd_precomputed_ms = 0;  // assemble + iterate with W, L given
  double lpffd_iter_local_ms = 0;   // per iteration
  double lpffd_iter_global_ms = 0;  // per iteration
  double pipeline_dgp_ms = 0;       // first stage, grid independent
  double pipeline_inverse_ms = 0;   // second stage incl. W
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Two vertex handles: the leftmost vertex pinned, the rightmost pulled out by
/// a quarter of the model width. With a seed, a random pair is used instead.
inline HandleSet stretch_handles(const TriMesh& mesh, std::optional<unsigned> seed = std::nullopt) {
  const Points& V = mesh.vertices();
  int lo = 0, hi = 0;
  if (seed) {
    std::mt19937 rng(*seed);
    std::uniform_int_distribution<int> pick(0, mesh.vertex_count() - 1);
    lo = pick(rng);
    do hi = pick(rng);
    while (hi == lo && mesh.vertex_count() > 1);
  } else {
    V.col(0).minCoeff(&lo);
    V.col(0).maxCoeff(&hi);
  }
  const double width = bounding_box(V).extent[0];
  HandleSet h;
  h.vertex[lo] = V.row(lo).transpose();
  Eigen::VectorXd pulled = V.row(hi).transpose();
  pulled[0] += 0.25 * width;
  h.vertex[hi] = pulled;
  return h;
}

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

/// Single-threaded timing of lp-FFD and the two-step pipeline.
inline BenchRow bench_scene(const std::string& name, const TriMesh& mesh, const std::vector<int>& dims, int repeats,
                            const HandleSet& handles, const SolverConfig& config = {},
                            const PipelineOptions& pipeline = {}) {
  Eigen::setNbThreads(1);
  if (repeats < 1) throw Error(ErrorCode::InvalidInput, "repeats must be at least 1");
  BenchRow row;
  row.scene = name;
  row.vertices = mesh.vertex_count();
  row.dims = dims;
  row.repeats = repeats;
  std::vector<double> full, pre, local, global, dgp, inv;
  for (int r = 0; r < repeats; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    const LatticeGrid grid = LatticeGrid::around(mesh.vertices(), dims);
    const EmbeddingWeights W = build_weights(mesh.vertices(), grid);
    const LaplacianMatrix L = build_laplacian(mesh, config.laplacian_mode);
    SolveResult res = lp_ffd_solve(mesh, grid, W, L, handles, config);
    full.push_back(elapsed_ms(t0));

    t0 = std::chrono::steady_clock::now();
    res = lp_ffd_solve(mesh, grid, W, L, handles, config);
    pre.push_back(elapsed_ms(t0));
    local.push_back(median(res.timings.local_ms));
    global.push_back(median(res.timings.global_ms));

    // pipeline, without precomputed W and L
    t0 = std::chrono::steady_clock::now();
    const LaplacianMatrix L2 = build_laplacian(mesh, config.laplacian_mode);
    const DgpResult d = dgp_solve(mesh, L2, handles.vertex, pipeline.dgp);
    dgp.push_back(elapsed_ms(t0));
    t0 = std::chrono::steady_clock::now();
    const EmbeddingWeights W2 = build_weights(mesh.vertices(), grid);
    const Points P = inverse_ffd_fit(W2, d.vertices, pipeline.regularizer, pipeline.lambda, grid);
    inv.push_back(elapsed_ms(t0));
    (void)P;
  }
  row.lpffd_full_ms = median(full);
  row.lpffd_precomputed_ms = median(pre);
  row.lpffd_iter_local_ms = median(local);
  row.lpffd_iter_global_ms = median(global);
  row.pipeline_dgp_ms = median(dgp);
  row.pipeline_inverse_ms = median(inv);
  return row;
}

inline std::string dims_label(const std::vector<int>& dims) {
  std::string s;
  for (size_t a = 0; a < dims.size(); ++a) s += (a ? "x" : "") + std::to_string(dims[a]);
  return s;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out =
      "scene,vertices,grid,handles,repeats,lpffd_full_ms,lpffd_precomputed_ms,lpffd_iter_local_ms,"
      "lpffd_iter_global_ms,pipeline_dgp_ms,pipeline_inverse_ms,pipeline_total_ms\n";
  for (const auto& r : rows) {
    int handles = 1;
    for (int n : r.dims) handles *= n;
    out += r.scene + ',' + std::to_string(r.vertices) + ',' + dims_label(r.dims) + ',' + std::to_string(handles) +
           ',' + std::to_string(r.repeats) + ',' + format_double(r.lpffd_full_ms) + ',' +
           format_double(r.lpffd_precomputed_ms) + ',' + format_double(r.lpffd_iter_local_ms) + ',' +
           format_double(r.lpffd_iter_global_ms) + ',' + format_double(r.pipeline_dgp_ms) + ',' +
           format_double(r.pipeline_inverse_ms) + ',' + format_double(r.pipeline_dgp_ms + r.pipeline_inverse_ms) +
           '\n';
  }
  return out;
}

}  // namespace lpffd
