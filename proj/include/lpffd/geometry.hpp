#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lpffd/error.hpp"

namespace lpffd {

/// Row-per-point coordinate matrix (n x dimension).
using Points = Eigen::MatrixXd;
using Triangle = std::array<int, 3>;

/// Axis-aligned box in model units.
struct Box {
  Eigen::VectorXd origin;
  Eigen::VectorXd extent;

  int dimension() const { return static_cast<int>(origin.size()); }
};

inline Box bounding_box(const Points& points) {
  Box box;
  if (points.rows() == 0) {
    box.origin = Eigen::VectorXd::Zero(points.cols());
    box.extent = Eigen::VectorXd::Zero(points.cols());
    return box;
  }
  box.origin = points.colwise().minCoeff().transpose();
  box.extent = points.colwise().maxCoeff().transpose() - box.origin;
  return box;
}

/// Characteristic length of a point set: bounding-box diagonal (1 when empty or flat).
inline double model_scale(const Points& points) {
  const double d = bounding_box(points).extent.norm();
  return d > 0.0 ? d : 1.0;
}

/// Named vertex/triangle range of a scene layer.
struct Layer {
  std::string name;
  int first_vertex = 0;
  int vertex_count = 0;
  int first_triangle = 0;
  int triangle_count = 0;
};

/// Triangle mesh in 2D or 3D, possibly made of several isolated components.
/// Adjacency and component labels are derived on construction; out-of-range
/// indices are tolerated here and reported by validate_mesh.
class TriMesh {
 public:
  TriMesh() = default;
  TriMesh(int dimension, Points vertices, std::vector<Triangle> triangles,
          std::vector<Layer> layers = {})
      : dimension_(dimension),
        vertices_(std::move(vertices)),
        triangles_(std::move(triangles)),
        layers_(std::move(layers)) {
    if (dimension_ != 2 && dimension_ != 3)
      throw Error(ErrorCode::InvalidInput, "mesh dimension must be 2 or 3");
    if (vertices_.rows() > 0 && vertices_.cols() != dimension_)
      throw Error(ErrorCode::DimensionMismatch, "vertex coordinates do not match mesh dimension");
    vertices_.conservativeResize(vertices_.rows(), dimension_);
    if (layers_.empty())
      layers_.push_back({"mesh", 0, vertex_count(), 0, static_cast<int>(triangles_.size())});
    build_adjacency();
    build_components();
  }

  int dimension() const { return dimension_; }
  int vertex_count() const { return static_cast<int>(vertices_.rows()); }
  int triangle_count() const { return static_cast<int>(triangles_.size()); }
  const Points& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// One-ring neighbours of vertex i, sorted ascending.
  const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }
  const std::vector<std::vector<int>>& adjacency() const { return neighbors_; }

  /// Undirected edges (i < j), sorted.
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }

  const std::vector<int>& component_ids() const { return component_; }
  int component_count() const { return component_count_; }

 private:
  static bool in_range(int idx, int n) { return idx >= 0 && idx < n; }

  void build_adjacency() {
    const int n = vertex_count();
    neighbors_.assign(n, {});
    for (const auto& t : triangles_) {
      for (int k = 0; k < 3; ++k) {
        const int a = t[k], b = t[(k + 1) % 3];
        if (!in_range(a, n) || !in_range(b, n) || a == b) continue;
        neighbors_[a].push_back(b);
        neighbors_[b].push_back(a);
      }
    }
    for (int i = 0; i < n; ++i) {
      auto& nb = neighbors_[i];
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
      for (int j : nb)
        if (i < j) edges_.push_back({i, j});
    }
  }

  void build_components() {
    const int n = vertex_count();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& e : edges_) {
      const int ra = find(e[0]), rb = find(e[1]);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
    // Label by order of first appearance so ids are 0..k-1.
    component_.assign(n, -1);
    std::vector<int> label(n, -1);
    component_count_ = 0;
    for (int i = 0; i < n; ++i) {
      const int r = find(i);
      if (label[r] < 0) label[r] = component_count_++;
      component_[i] = label[r];
    }
  }

  int dimension_ = 2;
  Points vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Layer> layers_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<int> component_;
  int component_count_ = 0;
};

/// Twice the signed area (2D) or the area-normal magnitude times two (3D).
inline double doubled_area(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  const Eigen::VectorXd e1 = b - a, e2 = c - a;
  if (a.size() == 2) return e1.x() * e2.y() - e1.y() * e2.x();
  return Eigen::Vector3d(e1).cross(Eigen::Vector3d(e2)).norm();
}

/// Area below which a triangle counts as degenerate for this point set.
inline double degenerate_area_epsilon(const Points& points) {
  const double s = model_scale(points);
  return 1e-12 * s * s;
}

struct Violation {
  enum class Kind { BadIndex, DegenerateTriangle, DimensionMismatch };
  Kind kind;
  int triangle = -1;
  std::string message;
};

using ValidationReport = std::vector<Violation>;

inline ValidationReport validate_mesh(const TriMesh& mesh) {
  ValidationReport report;
  const int n = mesh.vertex_count();
  if (mesh.vertices().cols() != mesh.dimension())
    report.push_back({Violation::Kind::DimensionMismatch, -1, "coordinate count differs from dimension"});
  const double eps = degenerate_area_epsilon(mesh.vertices());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    bool bad = false;
    for (int k : tri)
      if (k < 0 || k >= n) bad = true;
    if (bad) {
      report.push_back({Violation::Kind::BadIndex, t, "bad index in triangle " + std::to_string(t)});
      continue;
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      report.push_back({Violation::Kind::DegenerateTriangle, t,
                        "degenerate triangle " + std::to_string(t) + " (repeated vertex)"});
      continue;
    }
    const auto& v = mesh.vertices();
    const double a = std::abs(doubled_area(v.row(tri[0]).transpose(), v.row(tri[1]).transpose(),
                                           v.row(tri[2]).transpose())) / 2.0;
    if (a < eps)
      report.push_back({Violation::Kind::DegenerateTriangle, t,
                        "degenerate triangle " + std::to_string(t) + " (area " + std::to_string(a) + ")"});
  }
  return report;
}

/// Edge-connected component label per vertex (labels 0..k-1 by first vertex).
inline std::vector<int> split_components(const TriMesh& mesh) { return mesh.component_ids(); }

/// Tensor-product control lattice. Handles are flattened row-major over the
/// axes: index = m*N + n in 2D and (m*N + n)*K + k in 3D, where m runs along x.
class LatticeGrid {
 public:
  LatticeGrid() = default;
  LatticeGrid(std::vector<int> dims, Box box) : dims_(std::move(dims)), box_(std::move(box)) {
    const int d = static_cast<int>(dims_.size());
    if (d != 2 && d != 3) throw Error(ErrorCode::InvalidInput, "lattice dimension must be 2 or 3");
    if (box_.origin.size() != d || box_.extent.size() != d)
      throw Error(ErrorCode::DimensionMismatch, "lattice box dimension differs from dims");
    for (int a = 0; a < d; ++a) {
      if (dims_[a] < 2) throw Error(ErrorCode::InvalidInput, "every lattice axis needs at least 2 handles");
      if (!(box_.extent[a] > 0.0)) throw Error(ErrorCode::InvalidInput, "lattice box extent must be positive");
    }
    const int count = handle_count();
    rest_.resize(count, d);
    for (int h = 0; h < count; ++h) {
      const auto idx = multi_index(h);
      for (int a = 0; a < d; ++a)
        rest_(h, a) = box_.origin[a] + (static_cast<double>(idx[a]) / (dims_[a] - 1)) * box_.extent[a];
    }
    current_ = rest_;
  }

  /// Grid around the bounding box of `points`, inflated by `padding` of the extent per side.
  static LatticeGrid around(const Points& points, std::vector<int> dims, double padding = 0.02) {
    Box box = bounding_box(points);
    const double fallback = model_scale(points);
    for (int a = 0; a < box.extent.size(); ++a) {
      double e = box.extent[a];
      if (e <= 0.0) e = fallback;  // flat along this axis
      box.origin[a] -= padding * e;
      box.extent[a] = e * (1.0 + 2.0 * padding);
    }
    return LatticeGrid(std::move(dims), std::move(box));
  }

  int dimension() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  const Box& box() const { return box_; }
  int handle_count() const {
    int c = 1;
    for (int n : dims_) c *= n;
    return c;
  }
  int degree(int axis) const { return dims_[axis] - 1; }

  const Points& rest() const { return rest_; }
  const Points& current() const { return current_; }

  void set_current(Points current) {
    if (current.rows() != rest_.rows() || current.cols() != rest_.cols())
      throw Error(ErrorCode::DimensionMismatch, "current handle positions have the wrong shape");
    current_ = std::move(current);
  }

  int flat_index(const std::array<int, 3>& idx) const {
    int flat = 0;
    for (int a = 0; a < dimension(); ++a) flat = flat * dims_[a] + idx[a];
    return flat;
  }

  std::array<int, 3> multi_index(int flat) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = dimension() - 1; a >= 0; --a) {
      idx[a] = flat % dims_[a];
      flat /= dims_[a];
    }
    return idx;
  }

  /// Lattice edges between axis neighbours (each pair once, lower index first).
  std::vector<std::array<int, 2>> edges() const {
    std::vector<std::array<int, 2>> out;
    for (int h = 0; h < handle_count(); ++h) {
      auto idx = multi_index(h);
      for (int a = 0; a < dimension(); ++a) {
        if (idx[a] + 1 >= dims_[a]) continue;
        auto next = idx;
        ++next[a];
        out.push_back({h, flat_index(next)});
      }
    }
    return out;
  }

 private:
  std::vector<int> dims_;
  Box box_;
  Points rest_;
  Points current_;
};

/// User constraints: vertex handles (direct) and grid handles (indirect).
struct HandleSet {
  std::map<int, Eigen::VectorXd> vertex;
  std::map<int, Eigen::VectorXd> grid;

  bool empty() const { return vertex.empty() && grid.empty(); }

  void validate(int vertex_count, int handle_count, int dimension) const {
    for (const auto& [id, target] : vertex) {
      if (id < 0 || id >= vertex_count)
        throw Error(ErrorCode::UnknownId, "unknown vertex handle id " + std::to_string(id));
      if (target.size() != dimension)
        throw Error(ErrorCode::DimensionMismatch, "vertex handle " + std::to_string(id) + " has wrong dimension");
    }
    for (const auto& [id, target] : grid) {
      if (id < 0 || id >= handle_count)
        throw Error(ErrorCode::UnknownId, "unknown grid handle id " + std::to_string(id));
      if (target.size() != dimension)
        throw Error(ErrorCode::DimensionMismatch, "grid handle " + std::to_string(id) + " has wrong dimension");
    }
  }
};

enum class OutsidePolicy { Error, Clamp };

/// Lattice parameters (u, v[, w]) in [0,1] per vertex. Overshoot at rounding
/// level (1e-12 of the extent) is always clamped; Clamp also absorbs up to
/// 1e-9 of the extent. Anything further raises VertexOutsideGrid.
inline Points embed(const Points& vertices, const LatticeGrid& grid, OutsidePolicy policy = OutsidePolicy::Error) {
  const int d = grid.dimension();
  if (vertices.cols() != d) throw Error(ErrorCode::DimensionMismatch, "vertex dimension differs from grid");
  const double tolerance = policy == OutsidePolicy::Clamp ? 1e-9 : 1e-12;
  Points params(vertices.rows(), d);
  for (int i = 0; i < vertices.rows(); ++i) {
    for (int a = 0; a < d; ++a) {
      const double e = grid.box().extent[a];
      double u = (vertices(i, a) - grid.box().origin[a]) / e;
      const double over = u < 0.0 ? -u : (u > 1.0 ? u - 1.0 : 0.0);
      if (over > tolerance) throw VertexOutsideGrid(i, over * e);
      params(i, a) = std::clamp(u, 0.0, 1.0);
    }
  }
  return params;
}

inline Points embed(const TriMesh& mesh, const LatticeGrid& grid, OutsidePolicy policy = OutsidePolicy::Error) {
  return embed(mesh.vertices(), grid, policy);
}

}  // namespace lpffd
