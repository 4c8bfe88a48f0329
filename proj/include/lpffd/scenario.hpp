#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lpffd/baselines.hpp"
#include "lpffd/io.hpp"
#include "lpffd/solver.hpp"

namespace lpffd {

enum class SolverKind { LpFfd, Hsu, Pipeline };

inline SolverKind solver_from_string(const std::string& s) {
  if (s == "lpffd") return SolverKind::LpFfd;
  if (s == "hsu") return SolverKind::Hsu;
  if (s == "pipeline") return SolverKind::Pipeline;
  throw Error(ErrorCode::InvalidInput, "unknown solver '" + s + "' (expected lpffd, hsu or pipeline)");
}

inline std::string to_string(SolverKind k) {
  switch (k) {
    case SolverKind::LpFfd: return "lpffd";
    case SolverKind::Hsu: return "hsu";
    case SolverKind::Pipeline: return "pipeline";
  }
  return "?";
}

/// One scripted edit: handle changes followed by a solve.
struct ScenarioStep {
  SolverKind solver = SolverKind::LpFfd;
  bool clear_all = false;
  std::map<int, Eigen::VectorXd> set_vertex;
  std::map<int, Eigen::VectorXd> set_grid;
  std::vector<int> clear_vertex;
  std::vector<int> clear_grid;

  void apply(HandleSet& h) const {
    if (clear_all) h = HandleSet{};
    for (int id : clear_vertex) h.vertex.erase(id);
    for (int id : clear_grid) h.grid.erase(id);
    for (const auto& [id, t] : set_vertex) h.vertex[id] = t;
    for (const auto& [id, t] : set_grid) h.grid[id] = t;
  }
};

struct Scenario {
  std::string scene_path;
  std::vector<int> dims{10, 10};
  std::optional<Box> box;
  SolverConfig config;
  PipelineOptions pipeline;
  std::vector<ScenarioStep> steps;
};

inline Scenario scenario_from_json(const json& j, const std::string& base_dir = ".", int dimension_hint = 0) {
  Scenario s;
  try {
    std::filesystem::path scene = j.at("scene").get<std::string>();
    if (scene.is_relative()) scene = std::filesystem::path(base_dir) / scene;
    s.scene_path = scene.string();
    if (j.contains("dims")) s.dims = j.at("dims").get<std::vector<int>>();
    const int d = dimension_hint ? dimension_hint : static_cast<int>(s.dims.size());
    if (j.contains("box"))
      s.box = Box{vector_from_json(j["box"].at("origin"), d), vector_from_json(j["box"].at("extent"), d)};
    if (j.contains("config")) apply_config_json(s.config, j.at("config"));
    if (j.contains("pipeline")) {
      const json& p = j.at("pipeline");
      s.pipeline.lambda = p.value("lambda", s.pipeline.lambda);
      const std::string reg = p.value("regularizer", std::string("noh"));
      if (reg == "noh") s.pipeline.regularizer = InverseRegularizer::NohSmoothing;
      else if (reg == "rest") s.pipeline.regularizer = InverseRegularizer::RestAnchor;
      else throw Error(ErrorCode::InvalidInput, "unknown pipeline regularizer " + reg);
      s.pipeline.dgp.max_iterations = p.value("dgp_iters", s.pipeline.dgp.max_iterations);
    }
    for (const json& step : j.value("steps", json::array())) {
      ScenarioStep st;
      st.solver = solver_from_string(step.value("solver", std::string("lpffd")));
      st.clear_all = step.value("clear_all", false);
      if (step.contains("set_vertex")) read_handle_list(step["set_vertex"], d, st.set_vertex);
      if (step.contains("set_grid")) read_handle_list(step["set_grid"], d, st.set_grid);
      st.clear_vertex = step.value("clear_vertex", std::vector<int>{});
      st.clear_grid = step.value("clear_grid", std::vector<int>{});
      s.steps.push_back(std::move(st));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("invalid scenario: ") + e.what());
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  const json j = read_json_file(path, "scenario");
  return scenario_from_json(j, std::filesystem::path(path).parent_path().string());
}

/// Everything needed to solve on one scene: the mesh, its lattice, and the
/// precomputed W and L.
struct Workspace {
  TriMesh mesh;
  LatticeGrid grid;
  EmbeddingWeights weights;
  LaplacianMatrix laplacian;

  static Workspace build(TriMesh mesh, const std::vector<int>& dims, const std::optional<Box>& box,
                         LaplacianMode mode) {
    const auto report = validate_mesh(mesh);
    if (!report.empty()) throw Error(ErrorCode::InvalidInput, "invalid scene: " + report.front().message);
    if (static_cast<int>(dims.size()) != mesh.dimension())
      throw Error(ErrorCode::DimensionMismatch, "grid dims do not match scene dimension");
    LatticeGrid grid = box ? LatticeGrid(dims, *box) : LatticeGrid::around(mesh.vertices(), dims);
    EmbeddingWeights W = build_weights(mesh.vertices(), grid);
    LaplacianMatrix L = build_laplacian(mesh, mode);
    return {std::move(mesh), std::move(grid), std::move(W), std::move(L)};
  }
};

struct StepOutcome {
  SolverKind solver = SolverKind::LpFfd;
  Points handles;
  Points vertices;
  std::vector<EnergyTerms> energies;  // lpffd only
  RotationField solve_rotations;      // lpffd only
  std::optional<PipelineResult> pipeline;
};

struct ScenarioOutcome {
  Workspace workspace;
  HandleSet handles;
  std::vector<StepOutcome> steps;
  SystemCache cache;

  const Points& final_handles() const { return steps.empty() ? workspace.grid.current() : steps.back().handles; }
  const Points& final_vertices() const {
    return steps.empty() ? workspace.mesh.vertices() : steps.back().vertices;
  }
};

/// Runs one step against the current state; lp-FFD warm-starts from the
/// current lattice.
inline StepOutcome run_step(Workspace& ws, HandleSet& handles, const ScenarioStep& step, const SolverConfig& config,
                            const PipelineOptions& pipeline, SystemCache& cache) {
  HandleSet next = handles;
  step.apply(next);
  next.validate(ws.mesh.vertex_count(), ws.grid.handle_count(), ws.mesh.dimension());
  StepOutcome out;
  out.solver = step.solver;
  switch (step.solver) {
    case SolverKind::LpFfd: {
      const Points warm = ws.grid.current();
      SolveResult r = lp_ffd_solve(ws.mesh, ws.grid, ws.weights, ws.laplacian, next, config, &warm, &cache);
      out.handles = std::move(r.handles);
      out.vertices = std::move(r.vertices);
      out.energies = std::move(r.energies);
      out.solve_rotations = std::move(r.solve_rotations);
      break;
    }
    case SolverKind::Hsu:
      out.handles = hsu_solve(ws.weights, next, config, ws.grid);
      out.vertices = forward_ffd(ws.weights, out.handles);
      break;
    case SolverKind::Pipeline: {
      PipelineResult r = dgp_inverse_pipeline(ws.mesh, ws.grid, ws.weights, ws.laplacian, next, pipeline);
      out.handles = r.handles;
      out.vertices = r.ffd_vertices;
      out.pipeline = std::move(r);
      break;
    }
  }
  handles = std::move(next);
  ws.grid.set_current(out.handles);
  return out;
}

inline ScenarioOutcome run_scenario(const Scenario& s, const TriMesh* preloaded = nullptr) {
  TriMesh mesh = preloaded ? *preloaded : load_scene(s.scene_path, static_cast<int>(s.dims.size()));
  ScenarioOutcome out{Workspace::build(std::move(mesh), s.dims, s.box, s.config.laplacian_mode), {}, {}, {}};
  for (const auto& step : s.steps)
    out.steps.push_back(run_step(out.workspace, out.handles, step, s.config, s.pipeline, out.cache));
  return out;
}

}  // namespace lpffd
