#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lpffd/error.hpp"
#include "lpffd/geometry.hpp"

namespace lpffd {

struct TriangleDistortion {
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double angular = 0.0;  // (s1/s2 + s2/s1)/2 - 1
  double area = 0.0;     // (s1 s2 + 1/(s1 s2))/2 - 1
};

/// Area-weighted angular and area distortion of a deformation.
struct DistortionReport {
  double angular = 0.0;
  double area = 0.0;
  std::vector<TriangleDistortion> per_triangle;
  std::vector<double> rest_areas;
  std::vector<int> degenerate;  // deformed triangles with infinite terms, excluded from the means
};

namespace detail {

// Edge matrix [b-a, c-a] in the triangle's own plane.
inline Eigen::Matrix2d planar_edges(const Eigen::MatrixXd& tri) {
  const Eigen::VectorXd e1 = (tri.row(1) - tri.row(0)).transpose();
  const Eigen::VectorXd e2 = (tri.row(2) - tri.row(0)).transpose();
  Eigen::Matrix2d D;
  if (tri.cols() == 2) {
    D.col(0) = e1;
    D.col(1) = e2;
    return D;
  }
  const double len = e1.norm();
  if (len == 0.0) return Eigen::Matrix2d::Zero();
  const Eigen::Vector3d x = Eigen::Vector3d(e1) / len;
  const Eigen::Vector3d n = x.cross(Eigen::Vector3d(e2));
  const double nn = n.norm();
  if (nn == 0.0) return Eigen::Matrix2d::Zero();
  const Eigen::Vector3d y = (n / nn).cross(x);
  D << len, x.dot(Eigen::Vector3d(e2)), 0.0, y.dot(Eigen::Vector3d(e2));
  return D;
}

}  // namespace detail

/// Singular values (s1 >= s2 >= 0) of the Jacobian of the affine map taking
/// `rest` onto `deformed`. Triangles are 3 x dim coordinate rows; surface
/// triangles are flattened isometrically to their plane first.
inline std::pair<double, double> triangle_singular_values(const Eigen::MatrixXd& rest, const Eigen::MatrixXd& deformed) {
  const Eigen::Matrix2d Dr = detail::planar_edges(rest);
  const Eigen::Matrix2d Dd = detail::planar_edges(deformed);
  const double scale = std::max(Dr.cwiseAbs().maxCoeff(), 1e-300);
  if (std::abs(Dr.determinant()) <= 1e-12 * scale * scale)
    throw Error(ErrorCode::DegenerateTriangle, "degenerate rest triangle");
  const Eigen::Matrix2d J = Dd * Dr.inverse();
  // 2x2 closed form: J = rotation * diag * rotation via the conformal /
  // anticonformal split.
  const double E = 0.5 * (J(0, 0) + J(1, 1)), F = 0.5 * (J(0, 0) - J(1, 1));
  const double G = 0.5 * (J(1, 0) + J(0, 1)), H = 0.5 * (J(1, 0) - J(0, 1));
  const double Q = std::hypot(E, H), R = std::hypot(F, G);
  return {Q + R, std::abs(Q - R)};
}

inline TriangleDistortion triangle_distortion(double s1, double s2) {
  TriangleDistortion t{s1, s2, 0.0, 0.0};
  const double tiny = 1e-12 * std::max(s1, 1.0);
  if (!(s2 > tiny)) {
    t.angular = t.area = std::numeric_limits<double>::infinity();
    return t;
  }
  t.angular = 0.5 * (s1 / s2 + s2 / s1) - 1.0;
  const double j = s1 * s2;
  t.area = 0.5 * (j + 1.0 / j) - 1.0;
  return t;
}

inline DistortionReport distortion_report(const TriMesh& mesh, const Points& deformed) {
  if (deformed.rows() != mesh.vertex_count() || deformed.cols() != mesh.dimension())
    throw Error(ErrorCode::DimensionMismatch, "deformed positions do not match the mesh");
  DistortionReport report;
  const auto& V = mesh.vertices();
  double weight = 0.0, angular = 0.0, area = 0.0;
  Eigen::MatrixXd rt(3, mesh.dimension()), dt(3, mesh.dimension());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    for (int k = 0; k < 3; ++k) {
      rt.row(k) = V.row(tri[k]);
      dt.row(k) = deformed.row(tri[k]);
    }
    const double a = std::abs(doubled_area(rt.row(0).transpose(), rt.row(1).transpose(), rt.row(2).transpose())) / 2.0;
    const auto [s1, s2] = triangle_singular_values(rt, dt);
    const TriangleDistortion td = triangle_distortion(s1, s2);
    report.per_triangle.push_back(td);
    report.rest_areas.push_back(a);
    if (!std::isfinite(td.angular)) {
      report.degenerate.push_back(t);
      continue;
    }
    weight += a;
    angular += a * td.angular;
    area += a * td.area;
  }
  if (weight > 0.0) {
    report.angular = angular / weight;
    report.area = area / weight;
  }
  return report;
}

}  // namespace lpffd
