// Writes the procedural scenes, images, scenarios and the drag log into a data directory.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "lpffd/bench.hpp"
#include "lpffd/lpffd.hpp"
#include "lpffd/shapes.hpp"

namespace fs = std::filesystem;
using namespace lpffd;

namespace {

json handle_list(const std::map<int, Eigen::VectorXd>& m) {
  json list = json::array();
  for (const auto& [id, t] : m) list.push_back({{"id", id}, {"target", vector_to_json(t)}});
  return list;
}

json scenario(const std::string& scene, const std::vector<int>& dims, const std::vector<json>& steps) {
  return {{"scene", scene}, {"dims", dims}, {"steps", steps}};
}

json step(const std::string& solver, const std::map<int, Eigen::VectorXd>& set_vertex) {
  return {{"solver", solver}, {"set_vertex", handle_list(set_vertex)}};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? argv[1] : "data";
  fs::create_directories(dir);

  const TriMesh ginger = shapes::gingerman();
  const TriMesh bird = shapes::bird();
  const TriMesh sphere = shapes::lumpy_sphere();
  write_json_file((dir / "gingerman.json").string(), scene_to_json(ginger));
  write_json_file((dir / "bird.json").string(), scene_to_json(bird));
  write_json_file((dir / "sphere.json").string(), scene_to_json(sphere));
  write_ppm(shapes::flag_image(), (dir / "flag.ppm").string());

  // arm stretch: left hand pinned, right hand pulled outwards
  const HandleSet arm = stretch_handles(ginger);
  for (const std::string solver : {"lpffd", "hsu", "pipeline"}) {
    const std::string name = solver == "lpffd" ? "arm_stretch.json" : "arm_stretch_" + solver + ".json";
    write_json_file((dir / name).string(), scenario("gingerman.json", {10, 10}, {step(solver, arm.vertex)}));
  }

  // rest: handles placed at their rest positions
  std::map<int, Eigen::VectorXd> rest_handles;
  for (const auto& [id, t] : arm.vertex) rest_handles[id] = ginger.vertices().row(id).transpose();
  write_json_file((dir / "rest.json").string(), scenario("gingerman.json", {10, 10}, {step("lpffd", rest_handles)}));

  const HandleSet bulge = stretch_handles(sphere);
  write_json_file((dir / "sphere_stretch.json").string(), scenario("sphere.json", {5, 5, 5}, {step("lpffd", bulge.vertex)}));

  // drag: the right hand is dragged to the arm-stretch target in ten moves
  int pinned = arm.vertex.begin()->first, dragged = std::prev(arm.vertex.end())->first;
  if (arm.vertex.at(pinned) != ginger.vertices().row(pinned).transpose()) std::swap(pinned, dragged);
  const Eigen::VectorXd from = ginger.vertices().row(dragged).transpose();
  const Eigen::VectorXd to = arm.vertex.at(dragged);
  std::ofstream log(dir / "drag_log.ndjson");
  log << json{{"type", "createSession"},
              {"payload", {{"id", "drag"}, {"scene", scene_to_json(ginger)}, {"dims", {10, 10}}}}}
             .dump()
      << '\n';
  std::vector<json> steps;
  std::map<int, Eigen::VectorXd> current{{pinned, ginger.vertices().row(pinned).transpose()}, {dragged, from}};
  log << json{{"type", "updateHandles"},
              {"session", "drag"},
              {"payload", {{"vertex", {{"set", handle_list(current)}}}, {"solveNow", true}}}}
             .dump()
      << '\n';
  steps.push_back(step("lpffd", current));
  for (int k = 1; k <= 10; ++k) {
    const std::map<int, Eigen::VectorXd> move{{dragged, from + (to - from) * (k / 10.0)}};
    log << json{{"type", "updateHandles"},
                {"session", "drag"},
                {"payload", {{"vertex", {{"set", handle_list(move)}}}, {"solveNow", true}}}}
               .dump()
        << '\n';
    steps.push_back(step("lpffd", move));
  }
  log << json{{"type", "getState"}, {"session", "drag"}}.dump() << '\n';
  write_json_file((dir / "drag_scenario.json").string(), scenario("gingerman.json", {10, 10}, steps));

  std::cout << "fixtures written to " << dir.string() << '\n';
  return 0;
}
