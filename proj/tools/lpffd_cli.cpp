// lpffd command line: solve, bench, warp, transfer, metrics, serve.

#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lpffd/bench.hpp"
#include "lpffd/diagnostics.hpp"
#include "lpffd/lpffd.hpp"

// after Eigen: httplib pulls in <resolv.h>, whose _res macro clashes with Eigen internals
#include <CLI11.hpp>
#include <httplib.h>

namespace fs = std::filesystem;
using namespace lpffd;

namespace {

struct Options {
  std::string scenario, scene, grid, solver, out, in, dims, static_dir;
  std::vector<std::string> scenes, dims_list;
  double lambda_ml = 0, lambda_mp = 0, lambda_gp = 0, lambda_gr = 0;
  int iters = 0, tess = 0, repeats = 3, port = 8080;
  unsigned seed = 0;
  bool stdio = false;
};

std::vector<int> parse_dims(const std::string& s) {
  std::vector<int> dims;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, 'x')) {
    try {
      size_t used = 0;
      dims.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidInput, "bad --dims '" + s + "' (expected MxN or MxNxK)");
    }
  }
  if (dims.size() < 2 || dims.size() > 3) throw Error(ErrorCode::InvalidInput, "bad --dims '" + s + "'");
  return dims;
}

void print_error(const Error& e) {
  json j{{"code", to_string(e.code())}};
  std::string msg = e.what();
  const auto colon = msg.find(": ");
  if (e.code() == ErrorCode::NotFound && colon != std::string::npos) {
    j["error"] = msg.substr(0, colon);
    j["path"] = msg.substr(colon + 2);
  } else {
    j["error"] = msg;
  }
  std::cout << j.dump() << std::endl;
}

fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw Error(ErrorCode::InvalidInput, "--out is required");
  fs::create_directories(out);
  return out;
}

int cmd_solve(const Options& o, const CLI::App& app) {
  Scenario s;
  if (!o.scenario.empty()) {
    s = load_scenario(o.scenario);
  } else {
    if (o.scene.empty()) throw Error(ErrorCode::InvalidInput, "solve needs --scenario or --scene");
    s.scene_path = o.scene;
  }
  if (app.count("--scene") && !o.scenario.empty()) s.scene_path = o.scene;
  if (app.count("--dims")) s.dims = parse_dims(o.dims);
  if (app.count("--lambda-ml")) s.config.lambda_ml = o.lambda_ml;
  if (app.count("--lambda-mp")) s.config.lambda_mp = o.lambda_mp;
  if (app.count("--lambda-gp")) s.config.lambda_gp = o.lambda_gp;
  if (app.count("--lambda-gr")) s.config.lambda_gr = o.lambda_gr;
  if (app.count("--iters")) s.config.max_iterations = o.iters;
  s.config.validate();

  TriMesh mesh = load_scene(s.scene_path, static_cast<int>(s.dims.size()));
  if (o.scenario.empty()) {
    // ad hoc run: one stretch step on the scene
    ScenarioStep step;
    const HandleSet h = stretch_handles(mesh, app.count("--seed") ? std::optional<unsigned>(o.seed) : std::nullopt);
    step.set_vertex = h.vertex;
    s.steps.push_back(step);
  }
  if (app.count("--solver"))
    for (auto& step : s.steps) step.solver = solver_from_string(o.solver);

  const ScenarioOutcome r = run_scenario(s, &mesh);
  const Workspace& ws = r.workspace;
  const fs::path out = prepare_out(o.out);

  write_json_file((out / "grid.json").string(), grid_to_json(ws.grid));
  write_json_file((out / "scene.json").string(), scene_to_json(ws.mesh, &r.final_vertices()));
  const DistortionReport report = distortion_report(ws.mesh, r.final_vertices());
  json rep = report_to_json(report);
  rep["solver"] = r.steps.empty() ? "none" : to_string(r.steps.back().solver);
  rep["config"] = config_to_json(s.config);
  write_json_file((out / "report.json").string(), rep);
  std::vector<EnergyTerms> energies;
  if (!r.steps.empty()) energies = r.steps.back().energies;
  write_text_file((out / "energy.csv").string(), energy_csv(energies));

  json summary{{"status", "ok"}, {"steps", r.steps.size()}, {"angular", report.angular}, {"area", report.area}};
  if (!r.steps.empty() && r.steps.back().solver == SolverKind::LpFfd) {
    const StationarityCheck c =
        stationarity_check(ws.mesh, ws.weights, ws.laplacian, r.handles, s.config, ws.grid.rest(),
                           r.final_handles(), r.steps.back().solve_rotations);
    write_json_file((out / "check.json").string(), {{"passed", c.passed},
                                                    {"max_gradient", c.max_gradient},
                                                    {"scale", c.scale},
                                                    {"step", c.step},
                                                    {"floor", c.floor},
                                                    {"tolerance", 1e-5}});
    summary["stationary"] = c.passed;
  }
  if (!r.steps.empty() && r.steps.back().pipeline) {
    const auto& p = *r.steps.back().pipeline;
    summary["pipeline_gap"] = (p.ffd_vertices - p.dgp_vertices).rowwise().norm().maxCoeff();
  }
  std::cout << summary.dump() << std::endl;
  return 0;
}

int cmd_bench(const Options& o, const CLI::App& app) {
  if (o.scenes.empty()) throw Error(ErrorCode::InvalidInput, "bench needs at least one --scene");
  std::vector<std::vector<int>> grids;
  for (const auto& d : o.dims_list) grids.push_back(parse_dims(d));
  std::vector<BenchRow> rows;
  for (const auto& path : o.scenes) {
    const TriMesh mesh = load_scene(path, grids.empty() ? 2 : static_cast<int>(grids.front().size()));
    std::vector<std::vector<int>> use = grids;
    if (use.empty())
      for (int n : {5, 10, 15}) use.push_back(std::vector<int>(mesh.dimension(), n));
    const HandleSet h = stretch_handles(mesh, app.count("--seed") ? std::optional<unsigned>(o.seed) : std::nullopt);
    for (const auto& dims : use) {
      if (static_cast<int>(dims.size()) != mesh.dimension())
        throw Error(ErrorCode::DimensionMismatch, "grid dims do not match scene " + path);
      rows.push_back(bench_scene(fs::path(path).stem().string(), mesh, dims, o.repeats, h));
    }
  }
  const std::string csv = bench_csv(rows);
  if (o.out.empty()) std::cout << csv;
  else write_text_file(o.out, csv);
  return 0;
}

int cmd_warp(const Options& o) {
  const LatticeGrid grid = load_grid(o.grid);
  const Image in = read_ppm(o.in);
  const int tess = o.tess > 0 ? o.tess : 8 * std::max(grid.dims()[0], grid.dims()[1]);
  const WarpResult w = warp_image(grid, in, tess);
  if (o.out.empty()) throw Error(ErrorCode::InvalidInput, "--out is required");
  write_ppm(w.image, o.out);
  size_t covered = 0;
  for (auto c : w.coverage) covered += c;
  std::cout << json{{"status", "ok"}, {"tess", tess}, {"covered_pixels", covered}}.dump() << std::endl;
  return 0;
}

int cmd_transfer(const Options& o) {
  const LatticeGrid grid = load_grid(o.grid);
  const TriMesh mesh = load_scene(o.scene, grid.dimension());
  const Points moved = apply_grid(grid, mesh);
  if (o.out.empty()) throw Error(ErrorCode::InvalidInput, "--out is required");
  write_json_file(o.out, scene_to_json(mesh, &moved));
  std::cout << json{{"status", "ok"}, {"vertices", mesh.vertex_count()}}.dump() << std::endl;
  return 0;
}

// metrics: --scene is the rest scene, --in the deformed one (same topology)
int cmd_metrics(const Options& o) {
  const TriMesh rest = load_scene(o.scene);
  const TriMesh deformed = load_scene(o.in, rest.dimension());
  if (deformed.vertex_count() != rest.vertex_count() || deformed.dimension() != rest.dimension())
    throw Error(ErrorCode::DimensionMismatch, "deformed scene does not match the rest scene");
  const DistortionReport report = distortion_report(rest, deformed.vertices());
  const json j = report_to_json(report);
  if (o.out.empty()) std::cout << j.dump(2) << std::endl;
  else write_json_file(o.out, j);
  return 0;
}

json parse_error(const std::string& what) {
  return {{"type", "error"}, {"session", nullptr}, {"revision", 0},
          {"payload", {{"code", "invalid_message"}, {"message", what}}}};
}

// One message per line. A line holding a JSON array is handled as one burst,
// one response line per element.
int serve_stdio(SessionService& service) {
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    json in;
    try {
      in = json::parse(line);
    } catch (const json::exception& e) {
      std::cout << parse_error(e.what()).dump() << std::endl;
      continue;
    }
    if (in.is_array())
      for (const json& r : service.handle_burst(in.get<std::vector<json>>())) std::cout << r.dump() << '\n';
    else
      std::cout << service.handle(in).dump() << '\n';
    std::cout.flush();
  }
  return 0;
}

int serve_http(SessionService& service, const Options& o) {
  httplib::Server server;
  std::mutex mutex;
  if (!o.static_dir.empty() && !server.set_mount_point("/", o.static_dir))
    throw Error(ErrorCode::NotFound, "static directory not found: " + o.static_dir);
  server.Post("/api", [&](const httplib::Request& req, httplib::Response& res) {
    json out;
    try {
      const json in = json::parse(req.body);
      std::lock_guard<std::mutex> lock(mutex);
      if (in.is_array()) out = service.handle_burst(in.get<std::vector<json>>());
      else out = service.handle(in);
    } catch (const json::exception& e) {
      out = parse_error(e.what());
    }
    res.set_content(out.dump(), "application/json");
  });
  log().info("serving on http://127.0.0.1:{}", o.port);
  if (!server.listen("127.0.0.1", o.port)) throw Error(ErrorCode::InvalidInput, "cannot listen on port " + std::to_string(o.port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lattice FFD deformation with mesh-locality energy"};
  app.require_subcommand(1);
  Options o;

  auto* solve = app.add_subcommand("solve", "run a scenario (or a one-step stretch on --scene)");
  solve->add_option("--scenario", o.scenario, "scenario JSON");
  solve->add_option("--scene", o.scene, "scene JSON or OBJ");
  solve->add_option("--dims", o.dims, "grid handles per axis, MxN or MxNxK");
  solve->add_option("--solver", o.solver, "lpffd, hsu or pipeline");
  solve->add_option("--lambda-ml", o.lambda_ml);
  solve->add_option("--lambda-mp", o.lambda_mp);
  solve->add_option("--lambda-gp", o.lambda_gp);
  solve->add_option("--lambda-gr", o.lambda_gr);
  solve->add_option("--iters", o.iters, "maximum local/global iterations");
  solve->add_option("--seed", o.seed, "random handle pair for ad hoc runs");
  solve->add_option("--out", o.out, "output directory")->required();

  auto* bench = app.add_subcommand("bench", "single-threaded timing table (CSV)");
  bench->add_option("--scene", o.scenes, "scene files")->required();
  bench->add_option("--dims", o.dims_list, "grid sizes (default 5x5 10x10 15x15)");
  bench->add_option("--repeats", o.repeats)->check(CLI::PositiveNumber);
  bench->add_option("--seed", o.seed);
  bench->add_option("--out", o.out, "CSV path (stdout if omitted)");

  auto* warp = app.add_subcommand("warp", "deform a PPM image with a grid");
  warp->add_option("--grid", o.grid)->required();
  warp->add_option("--in", o.in, "input PPM")->required();
  warp->add_option("--out", o.out, "output PPM")->required();
  warp->add_option("--tess", o.tess, "tessellation (default 8x handles per axis)");

  auto* transfer = app.add_subcommand("transfer", "apply a saved grid to another scene");
  transfer->add_option("--grid", o.grid)->required();
  transfer->add_option("--scene", o.scene)->required();
  transfer->add_option("--out", o.out)->required();

  auto* metrics = app.add_subcommand("metrics", "distortion of a deformed scene against its rest scene");
  metrics->add_option("--scene", o.scene, "rest scene")->required();
  metrics->add_option("--in", o.in, "deformed scene")->required();
  metrics->add_option("--out", o.out);

  auto* serve = app.add_subcommand("serve", "session service over stdio (NDJSON) or HTTP");
  serve->add_flag("--stdio", o.stdio);
  serve->add_option("--port", o.port);
  serve->add_option("--static", o.static_dir, "directory served at /");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return cmd_solve(o, *solve);
    if (*bench) return cmd_bench(o, *bench);
    if (*warp) return cmd_warp(o);
    if (*transfer) return cmd_transfer(o);
    if (*metrics) return cmd_metrics(o);
    if (*serve) {
      SessionService service;
      return o.stdio ? serve_stdio(service) : serve_http(service, o);
    }
  } catch (const Error& e) {
    print_error(e);
    return e.code() == ErrorCode::NotFound ? 2 : 1;
  } catch (const std::exception& e) {
    std::cout << json{{"error", e.what()}, {"code", "internal"}}.dump() << std::endl;
    return 1;
  }
  return 0;
}
