#include <gtest/gtest.h>

#include <random>

#include "lpffd/bench.hpp"
#include "lpffd/diagnostics.hpp"
#include "lpffd/shapes.hpp"
#include "lpffd/solver.hpp"
#include "oracles.hpp"

using namespace lpffd;

namespace {

struct Fixture {
  TriMesh mesh;
  LatticeGrid grid;
  EmbeddingWeights W;
  LaplacianMatrix L;
  Eigen::MatrixXd dense_W;  // from the direct coefficient oracle

  Fixture(TriMesh m, std::vector<int> dims, LaplacianMode mode = LaplacianMode::Uniform)
      : mesh(std::move(m)),
        grid(LatticeGrid::around(mesh.vertices(), std::move(dims))),
        W(build_weights(mesh.vertices(), grid)),
        L(build_laplacian(mesh, mode)) {
    dense_W = oracle::weights(oracle::params_in_box(mesh.vertices(), grid.box().origin, grid.box().extent),
                              grid.dims());
  }

  oracle::Objective objective(const HandleSet& h, const SolverConfig& c) const {
    oracle::Objective f{&mesh, dense_W, grid.rest(), h.vertex, h.grid, {}, c.lambda_ml, c.lambda_mp, c.lambda_gp,
                        c.lambda_gr};
    return f;
  }
};

std::vector<Eigen::MatrixXd> as_matrices(const RotationField& R) {
  std::vector<Eigen::MatrixXd> out;
  for (int i = 0; i < R.size(); ++i) out.push_back(R.at(i));
  return out;
}

TriMesh small_mesh() {
  std::mt19937 rng(17);
  return shapes::random_grid_mesh(rng, 5, 6);
}

}  // namespace

TEST(AssembleSystem, TwoByTwoWithoutHandlesIsScaledIdentity) {
  Fixture f(small_mesh(), {2, 2});
  SolverConfig c;
  c.lambda_ml = 0.0;
  const FactoredSystem sys = assemble_system(f.W, f.L, {}, c);
  EXPECT_EQ(sys.A, Eigen::MatrixXd(c.lambda_gr * Eigen::MatrixXd::Identity(4, 4)));
}

TEST(AssembleSystem, LaplacianFormMatchesDenseAssembly) {
  Fixture f(shapes::gingerman(), {10, 10});
  SolverConfig c;
  c.locality = LocalityForm::LaplacianCoordinates;
  const FactoredSystem sys = assemble_system(f.W, f.L, {}, c);
  const Eigen::MatrixXd LW = oracle::uniform_laplacian(f.mesh) * f.dense_W;
  const Eigen::MatrixXd ref = c.lambda_ml * LW.transpose() * LW + c.lambda_gr * Eigen::MatrixXd::Identity(100, 100);
  EXPECT_LT(oracle::max_abs(sys.A - ref), 1e-12 * std::max(1.0, oracle::max_abs(ref)));
  EXPECT_LT(oracle::max_abs(sys.A - sys.A.transpose()), 1e-12);
}

TEST(AssembleSystem, EdgeFormIsTheQuadraticOfTheObjective) {
  Fixture f(small_mesh(), {4, 3});
  HandleSet h;
  h.vertex[3] = Eigen::Vector2d::Zero();
  h.vertex[17] = Eigen::Vector2d::Zero();
  h.grid[5] = Eigen::Vector2d::Zero();
  const SolverConfig c;
  const FactoredSystem sys = assemble_system(f.W, f.L, h, c);
  // with zero rotations, zero targets and a zero rest lattice the objective is x^T A x per axis
  oracle::Objective obj = f.objective(h, c);
  obj.rest_handles = Points::Zero(f.grid.handle_count(), 2);
  obj.R.assign(f.mesh.vertex_count(), Eigen::MatrixXd::Zero(2, 2));
  const int nh = f.grid.handle_count();
  const Eigen::MatrixXd ref = oracle::quadratic_form(
      [&](const Eigen::VectorXd& x) {
        Points P = Points::Zero(nh, 2);
        P.col(0) = x;
        return obj(P);
      },
      nh);
  EXPECT_LT(oracle::max_abs(sys.A - ref), 1e-10 * oracle::max_abs(ref));
}

TEST(AssembleSystem, GridHandleSwapsRegularizerForGridWeight) {
  Fixture f(small_mesh(), {4, 4});
  const SolverConfig c;
  HandleSet h;
  h.grid[6] = Eigen::Vector2d(1, 1);
  Eigen::MatrixXd diff = assemble_system(f.W, f.L, h, c).A - assemble_system(f.W, f.L, {}, c).A;
  EXPECT_NEAR(diff(6, 6), c.lambda_gp - c.lambda_gr, 1e-12);
  diff(6, 6) = 0.0;
  EXPECT_LT(oracle::max_abs(diff), 1e-12);
}

TEST(AssembleSystem, PivotsPositiveAndCachedSolveMatchesDenseSolve) {
  Fixture f(shapes::gingerman(), {10, 10});
  const HandleSet h = stretch_handles(f.mesh);
  const SolverConfig c;
  const FactoredSystem sys = assemble_system(f.W, f.L, h, c);
  EXPECT_GT(Eigen::MatrixXd(sys.factor.matrixL()).diagonal().minCoeff(), 0.0);
  const RotationField R = fit_rotations(f.mesh, f.L, f.mesh.vertices(), f.mesh.vertices());
  const Points rhs = assemble_rhs(sys, f.mesh, f.L, h, c, f.grid.rest(), R);
  const Points fresh = sys.A.fullPivLu().solve(rhs);
  EXPECT_LT(oracle::max_abs(sys.solve(rhs) - fresh), 1e-10);
}

TEST(AssembleSystem, RightHandSideIsHalfTheNegativeGradientAtZero) {
  Fixture f(small_mesh(), {4, 3});
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  HandleSet h;
  h.vertex[2] = Eigen::Vector2d(g(rng), g(rng));
  h.vertex[20] = Eigen::Vector2d(g(rng), g(rng));
  h.grid[7] = Eigen::Vector2d(g(rng), g(rng));
  const SolverConfig c;
  Points cur = f.mesh.vertices();
  for (int i = 0; i < cur.rows(); ++i) cur.row(i) += 0.2 * Eigen::RowVector2d(g(rng), g(rng));
  const RotationField R = fit_rotations(f.mesh, f.L, f.mesh.vertices(), cur);
  const FactoredSystem sys = assemble_system(f.W, f.L, h, c);
  const Points rhs = assemble_rhs(sys, f.mesh, f.L, h, c, f.grid.rest(), R);
  oracle::Objective obj = f.objective(h, c);
  obj.R = as_matrices(R);
  const Points zero = Points::Zero(f.grid.handle_count(), 2);
  const Points grad = oracle::gradient(std::cref(obj), zero, 1e-3);  // exact for a quadratic up to rounding
  EXPECT_LT(oracle::max_abs(rhs + 0.5 * grad), 1e-8 * std::max(1.0, oracle::max_abs(rhs)));
}

TEST(AssembleSystem, UnderdeterminedSystemReportsNullDirection) {
  Fixture f(small_mesh(), {5, 5});
  SolverConfig c;
  c.lambda_gr = 0.0;
  // nothing pins the lattice: translations are free
  try {
    assemble_system(f.W, f.L, {}, c);
    FAIL() << "expected NonPositiveDefinite";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveDefinite);
    EXPECT_NE(std::string(e.what()).find("null direction"), std::string::npos);
  }
}

TEST(AssembleSystem, RejectsUnknownHandleIds) {
  Fixture f(small_mesh(), {3, 3});
  HandleSet h;
  h.grid[9] = Eigen::Vector2d::Zero();
  EXPECT_THROW(assemble_system(f.W, f.L, h, {}), Error);
}

TEST(LpFfdSolve, EmptyHandleSetKeepsRest) {
  Fixture f(shapes::gingerman(), {10, 10});
  const SolveResult r = lp_ffd_solve(f.mesh, f.grid, f.W, f.L, {}, {});
  EXPECT_LT(oracle::max_abs(r.handles - f.grid.rest()), 1e-6);
  EXPECT_LT(oracle::max_abs(r.vertices - f.mesh.vertices()), 1e-6);
}

TEST(LpFfdSolve, VertexHandleAtRestKeepsRest) {
  Fixture f(shapes::bird(), {8, 8});
  HandleSet h;
  h.vertex[33] = f.mesh.vertices().row(33).transpose();
  const SolveResult r = lp_ffd_solve(f.mesh, f.grid, f.W, f.L, h, {});
  EXPECT_LT(oracle::max_abs(r.handles - f.grid.rest()), 1e-6);
}

TEST(LpFfdSolve, VerticesAreWeightsTimesHandles) {
  Fixture f(shapes::gingerman(), {10, 10});
  const SolveResult r = lp_ffd_solve(f.mesh, f.grid, f.W, f.L, stretch_handles(f.mesh), {});
  EXPECT_EQ(r.vertices, forward_ffd(f.W, r.handles));
}

TEST(LpFfdSolve, ArmStretchIsStationaryWithFrozenRotations) {
  Fixture f(shapes::gingerman(), {10, 10});
  const HandleSet h = stretch_handles(f.mesh);
  const SolverConfig c;
  const SolveResult r = lp_ffd_solve(f.mesh, f.grid, f.W, f.L, h, c);
  oracle::Objective obj = f.objective(h, c);
  obj.R = as_matrices(r.solve_rotations);
  const Points grad = oracle::gradient(std::cref(obj), r.handles, 1e-6);
  // scale: per coordinate, the summed magnitudes of the individual term gradients
  Points scale = Points::Zero(grad.rows(), grad.cols());
  for (int term = 0; term < 4; ++term) {
    oracle::Objective part = obj;
    part.ml = term == 0 ? c.lambda_ml : 0.0;
    part.mp = term == 1 ? c.lambda_mp : 0.0;
    part.gp = term == 2 ? c.lambda_gp : 0.0;
    part.gr = term == 3 ? c.lambda_gr : 0.0;
    scale += oracle::gradient(std::cref(part), r.handles, 1e-6).cwiseAbs();
  }
  ASSERT_GT(scale.maxCoeff(), 0.0);
  EXPECT_LE(grad.cwiseAbs().maxCoeff(), 1e-5 * scale.maxCoeff());
  // the built-in check agrees
  const StationarityCheck check =
      stationarity_check(f.mesh, f.W, f.L, h, c, f.grid.rest(), r.handles, r.solve_rotations);
  EXPECT_TRUE(check.passed);
}

TEST(LpFfdSolve, LaplacianFormIsStationaryWithFrozenRotations) {
  Fixture f(shapes::bird(), {7, 7});
  const HandleSet h = stretch_handles(f.mesh);
  SolverConfig c;
  c.locality = LocalityForm::LaplacianCoordinates;
  const SolveResult r = lp_ffd_solve(f.mesh, f.grid, f.W, f.L, h, c);
  const Eigen::MatrixXd L = oracle::uniform_laplacian(f.mesh);
  const Points delta = L * f.mesh.vertices();
  auto objective = [&](const Points& P) {
    const Points moved = L * f.dense_W * P;
    double e = 0.0;
    for (int i = 0; i < moved.rows(); ++i)
      e += c.lambda_ml * (moved.row(i).transpose() - r.solve_rotations.at(i) * delta.row(i).transpose()).squaredNorm();
    const Points Vd = f.dense_W * P;
    for (const auto& [id, t] : h.vertex) e += c.lambda_mp * (Vd.row(id).transpose() - t).squaredNorm();
    e += c.lambda_gr * (P - f.grid.rest()).squaredNorm();
    return e;
  };
  const Points grad = oracle::gradient(objective, r.handles, 1e-6);
  EXPECT_LE(grad.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(LpFfdSolve, EnergyIsNonIncreasingOnRandomScenarios) {
  std::mt19937 rng(99);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 8; ++trial) {
    Fixture f(trial % 2 ? shapes::bird() : shapes::gingerman(), {4 + trial, 10 - trial / 2});
    HandleSet h = stretch_handles(f.mesh, 100u + trial);
    h.grid[trial] = f.grid.rest().row(trial).transpose() + Eigen::Vector2d(g(rng), g(rng));
    SolverConfig c;
    c.max_iterations = 12;
    c.rel_tolerance = 0.0;
    const SolveResult r = lp_ffd_solve(f.mesh, f.grid, f.W, f.L, h, c);
    for (size_t k = 1; k < r.energies.size(); ++k)
      ASSERT_LE(r.energies[k].total, r.energies[k - 1].total * (1 + 1e-9)) << "trial " << trial << " iter " << k;
  }
}

TEST(LpFfdSolve, StopsEarlyOnRelativeTolerance) {
  Fixture f(shapes::gingerman(), {6, 6});
  SolverConfig c;
  c.max_iterations = 50;
  c.rel_tolerance = 1e-3;
  const SolveResult r = lp_ffd_solve(f.mesh, f.grid, f.W, f.L, stretch_handles(f.mesh), c);
  EXPECT_LT(r.iterations, 50);
  EXPECT_EQ(r.energies.size(), static_cast<size_t>(r.iterations) + 1);
  EXPECT_EQ(r.timings.global_ms.size(), static_cast<size_t>(r.iterations));
}

TEST(LpFfdSolve, RaisingVertexWeightTightensResiduals) {
  Fixture f(shapes::gingerman(), {10, 10});
  const HandleSet h = stretch_handles(f.mesh);
  SolverConfig soft, hard;
  hard.lambda_mp = 1e6;
  const SolveResult a = lp_ffd_solve(f.mesh, f.grid, f.W, f.L, h, soft);
  const SolveResult b = lp_ffd_solve(f.mesh, f.grid, f.W, f.L, h, hard);
  for (const auto& [id, t] : h.vertex)
    EXPECT_LE((b.vertices.row(id).transpose() - t).norm(), (a.vertices.row(id).transpose() - t).norm() + 1e-12);
}

TEST(LpFfdSolve, FarTranslatedSingleHandleIsNotRigid) {
  Fixture f(shapes::bird(), {10, 10});
  HandleSet h;
  const double scale = model_scale(f.mesh.vertices());
  h.vertex[0] = f.mesh.vertices().row(0).transpose() + Eigen::Vector2d(scale, 0.0);
  const SolveResult r = lp_ffd_solve(f.mesh, f.grid, f.W, f.L, h, {});
  const Points shift = r.vertices - f.mesh.vertices();
  const Eigen::RowVector2d mean = shift.colwise().mean();
  EXPECT_GT((shift.rowwise() - mean).rowwise().norm().maxCoeff(), 0.01 * scale);
}

TEST(LpFfdSolve, AllGridHandlesTranslatedGiveTranslation) {
  Fixture f(shapes::bird(), {6, 6});
  HandleSet h;
  const Eigen::RowVector2d t(0.4, -1.3);
  for (int k = 0; k < f.grid.handle_count(); ++k) h.grid[k] = (f.grid.rest().row(k) + t).transpose();
  const SolveResult r = lp_ffd_solve(f.mesh, f.grid, f.W, f.L, h, {});
  EXPECT_LT(oracle::max_abs(r.handles - (f.grid.rest().rowwise() + t)), 1e-9);
}

TEST(LpFfdSolve, NonFiniteTargetNamesHandle) {
  Fixture f(small_mesh(), {3, 3});
  HandleSet h;
  h.grid[4] = Eigen::Vector2d(std::nan(""), 0.0);
  try {
    lp_ffd_solve(f.mesh, f.grid, f.W, f.L, h, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NumericalFailure);
    EXPECT_NE(std::string(e.what()).find("grid handle"), std::string::npos);
  }
}

TEST(LpFfdSolve, CacheReusedForMoveOnlyEdits) {
  Fixture f(shapes::gingerman(), {10, 10});
  SystemCache cache;
  HandleSet h = stretch_handles(f.mesh);
  Points warm = f.grid.rest();
  for (int k = 0; k < 4; ++k) {
    std::prev(h.vertex.end())->second[1] += 0.1;
    warm = lp_ffd_solve(f.mesh, f.grid, f.W, f.L, h, {}, &warm, &cache).handles;
  }
  EXPECT_EQ(cache.misses(), 1);
  EXPECT_EQ(cache.hits(), 3);
  h.vertex[5] = f.mesh.vertices().row(5).transpose();
  lp_ffd_solve(f.mesh, f.grid, f.W, f.L, h, {}, &warm, &cache);
  EXPECT_EQ(cache.misses(), 2);
  SolverConfig other;
  other.lambda_gr = 1.0;
  lp_ffd_solve(f.mesh, f.grid, f.W, f.L, h, other, &warm, &cache);
  EXPECT_EQ(cache.misses(), 3);
}

TEST(EnergyEval, RestWithoutHandlesIsZero) {
  Fixture f(shapes::gingerman(), {10, 10});
  const EnergyTerms e = energy_eval(f.mesh, f.W, f.L, {}, {}, f.grid.rest(), f.grid.rest());
  EXPECT_LT(e.ml, 1e-20);
  EXPECT_EQ(e.mp, 0.0);
  EXPECT_EQ(e.gp, 0.0);
  EXPECT_EQ(e.gr, 0.0);
}

TEST(EnergyEval, TranslationCostsOnlyRegularizer) {
  Fixture f(shapes::gingerman(), {10, 10});
  const Eigen::RowVector2d t(0.3, 0.4);
  const EnergyTerms e = energy_eval(f.mesh, f.W, f.L, {}, {}, f.grid.rest(), f.grid.rest().rowwise() + t);
  EXPECT_NEAR(e.gr, 100 * t.squaredNorm(), 1e-12);
  EXPECT_LT(e.ml, 1e-20);
}

TEST(EnergyEval, LocalityTermMatchesBruteForceSum) {
  std::mt19937 rng(12);
  std::normal_distribution<double> g;
  Fixture f(shapes::bird(), {7, 6});
  for (int trial = 0; trial < 3; ++trial) {
    Points P = f.grid.rest();
    for (int k = 0; k < P.rows(); ++k) P.row(k) += 0.15 * Eigen::RowVector2d(g(rng), g(rng));
    const EnergyTerms e = energy_eval(f.mesh, f.W, f.L, {}, {}, f.grid.rest(), P);
    const Points Vd = f.dense_W * P;
    const auto R = oracle::best_rotations(f.mesh, f.mesh.vertices(), Vd);
    const std::vector<Eigen::MatrixXd> Rm(R.begin(), R.end());
    EXPECT_NEAR(e.ml, oracle::edge_energy(f.mesh, f.mesh.vertices(), Vd, Rm), 1e-10);
  }
}
