#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lpffd/geometry.hpp"
#include "lpffd/image.hpp"

// Procedural meshes and images for tests, benchmarks and demos.
namespace lpffd::shapes {

namespace detail {

struct LayerBuilder {
  std::vector<Eigen::RowVectorXd> verts;
  std::vector<Triangle> tris;
  std::vector<Layer> layers;

  void add(const std::string& name, const std::vector<Eigen::RowVectorXd>& v, const std::vector<Triangle>& t) {
    Layer l{name, static_cast<int>(verts.size()), static_cast<int>(v.size()), static_cast<int>(tris.size()),
            static_cast<int>(t.size())};
    for (const auto& p : v) verts.push_back(p);
    for (const auto& tri : t) tris.push_back({tri[0] + l.first_vertex, tri[1] + l.first_vertex, tri[2] + l.first_vertex});
    layers.push_back(l);
  }

  TriMesh build(int dim) const {
    Points V(static_cast<int>(verts.size()), dim);
    for (size_t i = 0; i < verts.size(); ++i) V.row(static_cast<int>(i)) = verts[i];
    return TriMesh(dim, V, tris, layers);
  }
};

inline Eigen::RowVectorXd p2(double x, double y) {
  Eigen::RowVectorXd v(2);
  v << x, y;
  return v;
}

inline double capsule_distance(double x, double y, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double t = std::clamp(((x - ax) * dx + (y - ay) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
  return std::hypot(x - (ax + t * dx), y - (ay + t * dy));
}

// Lattice points of spacing h inside `inside`; triangles from cells whose four corners are inside.
inline void rasterize_region(const std::function<bool(double, double)>& inside, double x0, double y0, double x1,
                             double y1, double h, std::vector<Eigen::RowVectorXd>& verts, std::vector<Triangle>& tris) {
  const int nx = static_cast<int>(std::ceil((x1 - x0) / h)) + 1;
  const int ny = static_cast<int>(std::ceil((y1 - y0) / h)) + 1;
  std::vector<int> id(static_cast<size_t>(nx) * ny, -1);
  auto at = [&](int i, int j) -> int& { return id[static_cast<size_t>(j) * nx + i]; };
  std::vector<char> in(static_cast<size_t>(nx) * ny, 0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) in[static_cast<size_t>(j) * nx + i] = inside(x0 + i * h, y0 + j * h);
  auto inside_at = [&](int i, int j) { return in[static_cast<size_t>(j) * nx + i] != 0; };
  auto vertex = [&](int i, int j) {
    int& v = at(i, j);
    if (v < 0) {
      v = static_cast<int>(verts.size());
      verts.push_back(p2(x0 + i * h, y0 + j * h));
    }
    return v;
  };
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) {
      if (!(inside_at(i, j) && inside_at(i + 1, j) && inside_at(i, j + 1) && inside_at(i + 1, j + 1))) continue;
      const int a = vertex(i, j), b = vertex(i + 1, j), c = vertex(i + 1, j + 1), d = vertex(i, j + 1);
      // alternate diagonals so the mesh has no preferred shear direction
      if ((i + j) % 2 == 0) {
        tris.push_back({a, b, c});
        tris.push_back({a, c, d});
      } else {
        tris.push_back({a, b, d});
        tris.push_back({b, c, d});
      }
    }
}

inline void disk(double cx, double cy, double r, int segments, std::vector<Eigen::RowVectorXd>& v,
                 std::vector<Triangle>& t) {
  v.push_back(p2(cx, cy));
  for (int k = 0; k < segments; ++k) {
    const double a = 2.0 * M_PI * k / segments;
    v.push_back(p2(cx + r * std::cos(a), cy + r * std::sin(a)));
  }
  for (int k = 0; k < segments; ++k) t.push_back({0, 1 + k, 1 + (k + 1) % segments});
}

}  // namespace detail

/// Layered cartoon figure: body, left eye, right eye and mouth as four
/// separate components (about 225 vertices).
inline TriMesh gingerman() {
  using detail::capsule_distance;
  auto body = [](double x, double y) {
    if (std::hypot(x, y - 2.2) <= 0.8) return true;                                   // head
    if (std::pow(x / 0.95, 2) + std::pow((y - 0.6) / 1.15, 2) <= 1.0) return true;     // torso
    if (capsule_distance(std::abs(x), y, 0.5, 1.2, 2.0, 1.0) <= 0.36) return true;     // arms
    if (capsule_distance(std::abs(x), y, 0.45, 0.0, 0.85, -1.6) <= 0.4) return true;   // legs
    return false;
  };
  detail::LayerBuilder b;
  std::vector<Eigen::RowVectorXd> v;
  std::vector<Triangle> t;
  detail::rasterize_region(body, -2.5, -2.1, 2.5, 3.1, 0.22, v, t);
  b.add("body", v, t);
  for (const auto& [name, cx] : {std::pair{"left_eye", -0.3}, std::pair{"right_eye", 0.3}}) {
    v.clear();
    t.clear();
    detail::disk(cx, 2.4, 0.13, 6, v, t);
    b.add(name, v, t);
  }
  v.clear();
  t.clear();
  for (int k = 0; k < 4; ++k) {
    v.push_back(detail::p2(-0.3 + 0.2 * k, 1.92));
    v.push_back(detail::p2(-0.3 + 0.2 * k, 2.02));
  }
  for (int k = 0; k < 3; ++k) {
    t.push_back({2 * k, 2 * k + 2, 2 * k + 3});
    t.push_back({2 * k, 2 * k + 3, 2 * k + 1});
  }
  b.add("mouth", v, t);
  return b.build(2);
}

/// Single-component bird-like blob (ellipse body, round head, tail), about 200 vertices.
inline TriMesh bird() {
  auto inside = [](double x, double y) {
    if (std::pow(x / 1.6, 2) + std::pow(y / 0.9, 2) <= 1.0) return true;
    if (std::hypot(x - 1.5, y - 0.7) <= 0.6) return true;
    if (x < -1.2 && x > -2.3 && std::abs(y - 0.2) <= 0.25 + 0.25 * (-1.2 - x)) return true;
    return false;
  };
  std::vector<Eigen::RowVectorXd> v;
  std::vector<Triangle> t;
  detail::rasterize_region(inside, -2.4, -1.0, 2.2, 1.4, 0.175, v, t);
  detail::LayerBuilder b;
  b.add("bird", v, t);
  return b.build(2);
}

/// Jittered rows x cols grid mesh over a random box.
inline TriMesh random_grid_mesh(std::mt19937& rng, int rows, int cols) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double ox = -5.0 + 10.0 * unit(rng), oy = -5.0 + 10.0 * unit(rng);
  const double sx = 0.5 + 9.5 * unit(rng), sy = 0.5 + 9.5 * unit(rng);
  const double hx = sx / (cols - 1), hy = sy / (rows - 1);
  Points V(rows * cols, 2);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double jx = (c > 0 && c + 1 < cols) ? 0.3 * hx * (unit(rng) - 0.5) : 0.0;
      const double jy = (r > 0 && r + 1 < rows) ? 0.3 * hy * (unit(rng) - 0.5) : 0.0;
      V(r * cols + c, 0) = ox + c * hx + jx;
      V(r * cols + c, 1) = oy + r * hy + jy;
    }
  std::vector<Triangle> tris;
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) {
      const int a = r * cols + c, b = a + 1, d = a + cols, e = d + 1;
      tris.push_back({a, b, e});
      tris.push_back({a, e, d});
    }
  return TriMesh(2, std::move(V), std::move(tris));
}

/// Closed UV-sphere surface deformed into a lumpy ellipsoid; (rings-1)*segments + 2 vertices.
inline TriMesh lumpy_sphere(int rings = 21, int segments = 24) {
  std::vector<Eigen::RowVectorXd> v;
  auto point = [](double theta, double phi) {
    const double r = 1.0 + 0.15 * std::sin(3.0 * phi) * std::sin(2.0 * theta);
    Eigen::RowVectorXd p(3);
    p << 1.2 * r * std::sin(theta) * std::cos(phi), 0.9 * r * std::sin(theta) * std::sin(phi), r * std::cos(theta);
    return p;
  };
  v.push_back(point(0.0, 0.0));
  for (int i = 1; i < rings; ++i)
    for (int j = 0; j < segments; ++j) v.push_back(point(M_PI * i / rings, 2.0 * M_PI * j / segments));
  v.push_back(point(M_PI, 0.0));
  const int south = static_cast<int>(v.size()) - 1;
  auto ring = [&](int i, int j) { return 1 + (i - 1) * segments + (j % segments); };
  std::vector<Triangle> t;
  for (int j = 0; j < segments; ++j) t.push_back({0, ring(1, j), ring(1, j + 1)});
  for (int i = 1; i + 1 < rings; ++i)
    for (int j = 0; j < segments; ++j) {
      t.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
      t.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
    }
  for (int j = 0; j < segments; ++j) t.push_back({south, ring(rings - 1, j + 1), ring(rings - 1, j)});
  detail::LayerBuilder b;
  b.add("surface", v, t);
  return b.build(3);
}

/// Striped flag with a diagonal band, for warping demos.
inline Image flag_image(int width = 96, int height = 64) {
  Image img(width, height, 3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const bool stripe = (y * 8 / height) % 2 == 0;
      const bool band = std::abs((x - y * width / static_cast<double>(height))) < width * 0.08;
      img.at(x, y, 0) = band ? 250 : (stripe ? 200 : 30);
      img.at(x, y, 1) = band ? 220 : (stripe ? 40 : 60);
      img.at(x, y, 2) = band ? 40 : (stripe ? 50 : 170);
    }
  return img;
}

}  // namespace lpffd::shapes
