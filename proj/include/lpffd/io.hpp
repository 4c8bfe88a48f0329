#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lpffd/baselines.hpp"
#include "lpffd/error.hpp"
#include "lpffd/geometry.hpp"
#include "lpffd/metrics.hpp"
#include "lpffd/solver.hpp"

namespace lpffd {

using json = nlohmann::json;

// Point rows <-> [[x, y(, z)], ...]. nlohmann emits the shortest decimal
// that round-trips, so doubles survive export/import bit-exactly.
inline json points_to_json(const Points& P) {
  json arr = json::array();
  for (int i = 0; i < P.rows(); ++i) {
    json row = json::array();
    for (int a = 0; a < P.cols(); ++a) row.push_back(P(i, a));
    arr.push_back(std::move(row));
  }
  return arr;
}

inline Points points_from_json(const json& arr, int dimension) {
  if (!arr.is_array()) throw Error(ErrorCode::InvalidInput, "expected an array of points");
  Points P(static_cast<int>(arr.size()), dimension);
  for (size_t i = 0; i < arr.size(); ++i) {
    const json& row = arr[i];
    if (!row.is_array() || static_cast<int>(row.size()) != dimension)
      throw Error(ErrorCode::InvalidInput, "point " + std::to_string(i) + " has the wrong dimension");
    for (int a = 0; a < dimension; ++a) P(static_cast<int>(i), a) = row[a].get<double>();
  }
  return P;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int a = 0; a < v.size(); ++a) arr.push_back(v[a]);
  return arr;
}

inline Eigen::VectorXd vector_from_json(const json& arr, int dimension) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != dimension)
    throw Error(ErrorCode::InvalidInput, "expected a " + std::to_string(dimension) + "-vector");
  Eigen::VectorXd v(dimension);
  for (int a = 0; a < dimension; ++a) v[a] = arr[a].get<double>();
  return v;
}

inline json read_json_file(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, what + " not found: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, "invalid " + what + " JSON in " + path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path);
  out << text;
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// Scenes

inline TriMesh scene_from_json(const json& j) {
  try {
    const int dim = j.at("dimension").get<int>();
    if (dim != 2 && dim != 3) throw Error(ErrorCode::InvalidInput, "invalid scene: dimension must be 2 or 3");
    std::vector<Layer> layers;
    std::vector<Eigen::RowVectorXd> verts;
    std::vector<Triangle> tris;
    for (const json& layer : j.at("layers")) {
      Layer info;
      info.name = layer.value("name", "layer" + std::to_string(layers.size()));
      info.first_vertex = static_cast<int>(verts.size());
      info.first_triangle = static_cast<int>(tris.size());
      const Points lv = points_from_json(layer.at("vertices"), dim);
      for (int i = 0; i < lv.rows(); ++i) verts.push_back(lv.row(i));
      for (const json& t : layer.at("triangles")) {
        if (!t.is_array() || t.size() != 3) throw Error(ErrorCode::InvalidInput, "invalid scene: triangle needs 3 indices");
        tris.push_back({info.first_vertex + t[0].get<int>(), info.first_vertex + t[1].get<int>(),
                        info.first_vertex + t[2].get<int>()});
      }
      info.vertex_count = static_cast<int>(lv.rows());
      info.triangle_count = static_cast<int>(tris.size()) - info.first_triangle;
      layers.push_back(std::move(info));
    }
    Points V(static_cast<int>(verts.size()), dim);
    for (size_t i = 0; i < verts.size(); ++i) V.row(static_cast<int>(i)) = verts[i];
    return TriMesh(dim, std::move(V), std::move(tris), std::move(layers));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("invalid scene: ") + e.what());
  }
}

/// Scene JSON with `positions` substituted for the vertices (rest when omitted).
inline json scene_to_json(const TriMesh& mesh, const Points* positions = nullptr) {
  const Points& P = positions ? *positions : mesh.vertices();
  json layers = json::array();
  for (const auto& layer : mesh.layers()) {
    json verts = json::array();
    for (int i = 0; i < layer.vertex_count; ++i) {
      json row = json::array();
      for (int a = 0; a < mesh.dimension(); ++a) row.push_back(P(layer.first_vertex + i, a));
      verts.push_back(std::move(row));
    }
    json tris = json::array();
    for (int t = 0; t < layer.triangle_count; ++t) {
      const auto& tri = mesh.triangles()[layer.first_triangle + t];
      tris.push_back({tri[0] - layer.first_vertex, tri[1] - layer.first_vertex, tri[2] - layer.first_vertex});
    }
    layers.push_back({{"name", layer.name}, {"vertices", std::move(verts)}, {"triangles", std::move(tris)}});
  }
  return {{"dimension", mesh.dimension()}, {"layers", std::move(layers)}};
}

/// Wavefront OBJ: `v` and `f` records (polygons fan-triangulated, 1-based or
/// negative indices). For dimension 2 the z coordinate is dropped.
inline TriMesh read_obj(std::istream& in, int dimension) {
  std::vector<Eigen::RowVectorXd> verts;
  std::vector<Triangle> tris;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      double x = 0, y = 0, z = 0;
      ls >> x >> y;
      if (!(ls >> z)) z = 0.0;
      Eigen::RowVectorXd v(dimension);
      if (dimension == 2) v << x, y;
      else v << x, y, z;
      verts.push_back(v);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ls >> tok) {
        const int idx = std::stoi(tok.substr(0, tok.find('/')));
        poly.push_back(idx < 0 ? static_cast<int>(verts.size()) + idx : idx - 1);
      }
      for (size_t k = 1; k + 1 < poly.size(); ++k) tris.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  Points V(static_cast<int>(verts.size()), dimension);
  for (size_t i = 0; i < verts.size(); ++i) V.row(static_cast<int>(i)) = verts[i];
  return TriMesh(dimension, std::move(V), std::move(tris));
}

/// Loads a scene from .json or .obj. OBJ files load as 2D unless `obj_dimension` is 3.
inline TriMesh load_scene(const std::string& path, int obj_dimension = 2) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::NotFound, "scene not found: " + path);
  if (std::filesystem::path(path).extension() == ".obj") {
    std::ifstream in(path);
    return read_obj(in, obj_dimension);
  }
  return scene_from_json(read_json_file(path, "scene"));
}

// ---------------------------------------------------------------------------
// Grids

inline json grid_to_json(const LatticeGrid& grid) {
  return {{"dims", grid.dims()},
          {"box", {{"origin", vector_to_json(grid.box().origin)}, {"extent", vector_to_json(grid.box().extent)}}},
          {"rest", points_to_json(grid.rest())},
          {"current", points_to_json(grid.current())}};
}

inline LatticeGrid grid_from_json(const json& j) {
  try {
    const auto dims = j.at("dims").get<std::vector<int>>();
    const int d = static_cast<int>(dims.size());
    Box box{vector_from_json(j.at("box").at("origin"), d), vector_from_json(j.at("box").at("extent"), d)};
    LatticeGrid grid(dims, box);
    if (j.contains("rest")) {
      const Points rest = points_from_json(j.at("rest"), d);
      if (rest.rows() != grid.handle_count() ||
          (rest - grid.rest()).cwiseAbs().maxCoeff() > 1e-9 * box.extent.cwiseAbs().maxCoeff())
        throw Error(ErrorCode::InvalidInput, "grid rest positions are not the regular lattice of its box");
    }
    if (j.contains("current")) grid.set_current(points_from_json(j.at("current"), d));
    return grid;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("invalid grid: ") + e.what());
  }
}

inline LatticeGrid load_grid(const std::string& path) { return grid_from_json(read_json_file(path, "grid")); }

// ---------------------------------------------------------------------------
// Handles, config, reports

inline json handles_to_json(const HandleSet& h) {
  json vertex = json::array(), grid = json::array();
  for (const auto& [id, t] : h.vertex) vertex.push_back({{"id", id}, {"target", vector_to_json(t)}});
  for (const auto& [id, t] : h.grid) grid.push_back({{"id", id}, {"target", vector_to_json(t)}});
  return {{"vertex", std::move(vertex)}, {"grid", std::move(grid)}};
}

inline void read_handle_list(const json& list, int dimension, std::map<int, Eigen::VectorXd>& into) {
  for (const json& item : list) into[item.at("id").get<int>()] = vector_from_json(item.at("target"), dimension);
}

inline std::string to_string(LaplacianMode m) { return m == LaplacianMode::Uniform ? "uniform" : "cotangent"; }
inline std::string to_string(LocalityForm f) { return f == LocalityForm::EdgeArap ? "edge" : "laplacian"; }

inline json config_to_json(const SolverConfig& c) {
  return {{"lambda_ml", c.lambda_ml},   {"lambda_mp", c.lambda_mp},         {"lambda_gp", c.lambda_gp},
          {"lambda_gr", c.lambda_gr},   {"iters", c.max_iterations},        {"rel_tolerance", c.rel_tolerance},
          {"laplacian", to_string(c.laplacian_mode)}, {"locality", to_string(c.locality)}};
}

/// Overrides fields of `c` present in `j`.
inline void apply_config_json(SolverConfig& c, const json& j) {
  try {
    c.lambda_ml = j.value("lambda_ml", c.lambda_ml);
    c.lambda_mp = j.value("lambda_mp", c.lambda_mp);
    c.lambda_gp = j.value("lambda_gp", c.lambda_gp);
    c.lambda_gr = j.value("lambda_gr", c.lambda_gr);
    c.max_iterations = j.value("iters", c.max_iterations);
    c.rel_tolerance = j.value("rel_tolerance", c.rel_tolerance);
    if (j.contains("laplacian")) {
      const auto s = j.at("laplacian").get<std::string>();
      if (s == "uniform") c.laplacian_mode = LaplacianMode::Uniform;
      else if (s == "cotangent") c.laplacian_mode = LaplacianMode::Cotangent;
      else throw Error(ErrorCode::InvalidInput, "unknown laplacian mode " + s);
    }
    if (j.contains("locality")) {
      const auto s = j.at("locality").get<std::string>();
      if (s == "edge") c.locality = LocalityForm::EdgeArap;
      else if (s == "laplacian") c.locality = LocalityForm::LaplacianCoordinates;
      else throw Error(ErrorCode::InvalidInput, "unknown locality form " + s);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("invalid config: ") + e.what());
  }
  c.validate();
}

inline json report_to_json(const DistortionReport& r, bool per_triangle = true) {
  json j = {{"angular", r.angular}, {"area", r.area}, {"degenerate", r.degenerate}};
  if (per_triangle) {
    json tris = json::array();
    for (size_t t = 0; t < r.per_triangle.size(); ++t) {
      const auto& td = r.per_triangle[t];
      auto num = [](double x) { return std::isfinite(x) ? json(x) : json("inf"); };
      tris.push_back({{"sigma1", td.sigma1}, {"sigma2", td.sigma2}, {"angular", num(td.angular)},
                      {"area", num(td.area)}, {"rest_area", r.rest_areas[t]}});
    }
    j["triangles"] = std::move(tris);
  }
  return j;
}

inline json energy_to_json(const EnergyTerms& e) {
  return {{"ml", e.ml}, {"mp", e.mp}, {"gp", e.gp}, {"gr", e.gr}, {"total", e.total}};
}

inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline std::string energy_csv(const std::vector<EnergyTerms>& energies) {
  std::string out = "iteration,ml,mp,gp,gr,total\n";
  for (size_t k = 0; k < energies.size(); ++k) {
    const auto& e = energies[k];
    out += std::to_string(k) + ',' + format_double(e.ml) + ',' + format_double(e.mp) + ',' + format_double(e.gp) +
           ',' + format_double(e.gr) + ',' + format_double(e.total) + '\n';
  }
  return out;
}

}  // namespace lpffd
