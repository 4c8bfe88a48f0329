#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "lpffd/error.hpp"
#include "lpffd/geometry.hpp"
#include "lpffd/log.hpp"

namespace lpffd {

enum class LaplacianMode { Uniform, Cotangent };

/// Graph Laplacian L (L_ii = sum_j w_ij, L_ij = -w_ij) plus the edge weights
/// laid out like TriMesh::neighbors for one-ring loops.
struct LaplacianMatrix {
  Eigen::SparseMatrix<double> matrix;
  LaplacianMode mode = LaplacianMode::Uniform;
  std::vector<std::vector<double>> neighbor_weights;
  std::uint64_t fingerprint = 0;

  int size() const { return static_cast<int>(matrix.rows()); }
};

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline double cotangent(const Eigen::VectorXd& apex, const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  const Eigen::VectorXd a = p - apex, b = q - apex;
  const double cross = std::abs(doubled_area(Eigen::VectorXd::Zero(a.size()), a, b));
  return a.dot(b) / cross;
}

}  // namespace detail

inline LaplacianMatrix build_laplacian(const TriMesh& mesh, LaplacianMode mode = LaplacianMode::Uniform) {
  const int n = mesh.vertex_count();
  std::vector<std::map<int, double>> w(n);
  if (mode == LaplacianMode::Uniform) {
    for (const auto& e : mesh.edges()) w[e[0]][e[1]] = 1.0;
  } else {
    const auto& V = mesh.vertices();
    const double eps = degenerate_area_epsilon(V);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      const auto& tri = mesh.triangles()[t];
      const Eigen::VectorXd p0 = V.row(tri[0]).transpose(), p1 = V.row(tri[1]).transpose(),
                            p2 = V.row(tri[2]).transpose();
      if (std::abs(doubled_area(p0, p1, p2)) / 2.0 < eps)
        throw Error(ErrorCode::DegenerateTriangle, "degenerate triangle " + std::to_string(t) + " in cotangent Laplacian");
      const Eigen::VectorXd* pts[3] = {&p0, &p1, &p2};
      for (int k = 0; k < 3; ++k) {
        // angle at corner k is opposite edge (k+1, k+2)
        const int i = tri[(k + 1) % 3], j = tri[(k + 2) % 3];
        const double c = 0.5 * detail::cotangent(*pts[k], *pts[(k + 1) % 3], *pts[(k + 2) % 3]);
        w[std::min(i, j)][std::max(i, j)] += c;
      }
    }
    for (auto& row : w)
      for (auto& [j, value] : row) value = std::max(value, 0.0);
  }

  LaplacianMatrix L;
  L.mode = mode;
  L.neighbor_weights.resize(n);
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (const auto& [j, value] : w[i]) {
      triplets.emplace_back(i, j, -value);
      triplets.emplace_back(j, i, -value);
      diag[i] += value;
      diag[j] += value;
    }
  }
  for (int i = 0; i < n; ++i) {
    triplets.emplace_back(i, i, diag[i]);
    const auto& nb = mesh.neighbors(i);
    L.neighbor_weights[i].reserve(nb.size());
    for (int j : nb) L.neighbor_weights[i].push_back(w[std::min(i, j)].at(std::max(i, j)));
  }
  L.matrix.resize(n, n);
  L.matrix.setFromTriplets(triplets.begin(), triplets.end());
  L.matrix.makeCompressed();

  std::uint64_t h = 1469598103934665603ull;
  const int m = static_cast<int>(mode);
  h = detail::fnv1a(h, &m, sizeof m);
  h = detail::fnv1a(h, L.matrix.valuePtr(), sizeof(double) * L.matrix.nonZeros());
  h = detail::fnv1a(h, L.matrix.innerIndexPtr(), sizeof(int) * L.matrix.nonZeros());
  L.fingerprint = h;
  return L;
}

/// delta = L V
inline Points differential_coords(const LaplacianMatrix& L, const Points& V) {
  if (L.size() != V.rows()) throw Error(ErrorCode::DimensionMismatch, "Laplacian and vertex count differ");
  return L.matrix * V;
}

/// Per-vertex rotations. 2D rotations live in the upper-left block.
struct RotationField {
  int dimension = 2;
  std::vector<Eigen::Matrix3d> rotations;

  int size() const { return static_cast<int>(rotations.size()); }

  Eigen::MatrixXd at(int i) const { return rotations[i].topLeftCorner(dimension, dimension); }

  static RotationField identity(int dimension, int n) {
    return {dimension, std::vector<Eigen::Matrix3d>(n, Eigen::Matrix3d::Identity())};
  }
};

/// R_i = argmin_R sum_j w_ij |(v'_i - v'_j) - R (v_i - v_j)|^2 over proper rotations.
inline RotationField fit_rotations(const TriMesh& mesh, const LaplacianMatrix& L, const Points& rest,
                                   const Points& current) {
  const int n = mesh.vertex_count();
  const int d = mesh.dimension();
  if (rest.rows() != n || current.rows() != n)
    throw Error(ErrorCode::DimensionMismatch, "fit_rotations needs a position for every vertex");
  RotationField field = RotationField::identity(d, n);
  for (int i = 0; i < n; ++i) {
    const auto& nb = mesh.neighbors(i);
    const auto& wts = L.neighbor_weights[i];
    if (d == 2) {
      double dot = 0.0, cross = 0.0;
      for (size_t k = 0; k < nb.size(); ++k) {
        const int j = nb[k];
        const double ex = rest(i, 0) - rest(j, 0), ey = rest(i, 1) - rest(j, 1);
        const double fx = current(i, 0) - current(j, 0), fy = current(i, 1) - current(j, 1);
        dot += wts[k] * (ex * fx + ey * fy);
        cross += wts[k] * (ex * fy - ey * fx);
      }
      if (dot == 0.0 && cross == 0.0) {
        if (!nb.empty()) log().debug("vertex {}: degenerate one-ring, identity rotation", i);
        continue;
      }
      const double theta = std::atan2(cross, dot);
      const double c = std::cos(theta), s = std::sin(theta);
      field.rotations[i].topLeftCorner<2, 2>() << c, -s, s, c;
    } else {
      Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
      for (size_t k = 0; k < nb.size(); ++k) {
        const int j = nb[k];
        const Eigen::Vector3d e = (rest.row(i) - rest.row(j)).transpose();
        const Eigen::Vector3d f = (current.row(i) - current.row(j)).transpose();
        S += wts[k] * e * f.transpose();
      }
      if (S.cwiseAbs().maxCoeff() == 0.0) {
        if (!nb.empty()) log().debug("vertex {}: degenerate one-ring, identity rotation", i);
        continue;
      }
      Eigen::JacobiSVD<Eigen::Matrix3d> svd(S, Eigen::ComputeFullU | Eigen::ComputeFullV);
      Eigen::Matrix3d U = svd.matrixU();
      const Eigen::Matrix3d Vm = svd.matrixV();
      Eigen::Matrix3d R = Vm * U.transpose();
      if (R.determinant() < 0.0) {
        U.col(2) *= -1.0;
        R = Vm * U.transpose();
      }
      field.rotations[i] = R;
    }
  }
  return field;
}

/// sum_i sum_{j in N(i)} w_ij |(v'_i - v'_j) - R_i (v_i - v_j)|^2
inline double arap_energy(const TriMesh& mesh, const LaplacianMatrix& L, const Points& rest, const Points& current,
                          const RotationField& R) {
  double energy = 0.0;
  const int d = mesh.dimension();
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const auto& nb = mesh.neighbors(i);
    const Eigen::MatrixXd Ri = R.at(i);
    for (size_t k = 0; k < nb.size(); ++k) {
      const int j = nb[k];
      const Eigen::VectorXd e = (rest.row(i) - rest.row(j)).transpose();
      const Eigen::VectorXd f = (current.row(i) - current.row(j)).transpose();
      energy += L.neighbor_weights[i][k] * (f - Ri * e).head(d).squaredNorm();
    }
  }
  return energy;
}

/// b_i = sum_j w_ij (R_i + R_j)(v_i - v_j): right-hand side of the ARAP
/// position step, 2 L V' = b.
inline Points arap_rhs(const TriMesh& mesh, const LaplacianMatrix& L, const Points& rest, const RotationField& R) {
  const int n = mesh.vertex_count(), d = mesh.dimension();
  Points b = Points::Zero(n, d);
  for (int i = 0; i < n; ++i) {
    const auto& nb = mesh.neighbors(i);
    for (size_t k = 0; k < nb.size(); ++k) {
      const int j = nb[k];
      const Eigen::VectorXd e = (rest.row(i) - rest.row(j)).transpose();
      b.row(i) += (L.neighbor_weights[i][k] * (R.at(i) + R.at(j)) * e).transpose();
    }
  }
  return b;
}

struct DgpOptions {
  int max_iterations = 5;
  double rel_tolerance = 1e-6;
};

struct DgpResult {
  Points vertices;
  std::vector<double> energies;  // energy of the initial guess, then after each iteration
  std::vector<int> anchored_components;
};

/// Classic local/global ARAP with handle targets imposed as hard constraints.
/// Components without any handle are held at their rest pose.
inline DgpResult dgp_solve(const TriMesh& mesh, const LaplacianMatrix& L, const std::map<int, Eigen::VectorXd>& handles,
                           const DgpOptions& options = {}) {
  const int n = mesh.vertex_count(), d = mesh.dimension();
  const Points& rest = mesh.vertices();
  for (const auto& [id, target] : handles)
    if (id < 0 || id >= n || target.size() != d)
      throw Error(ErrorCode::UnknownId, "invalid DGP handle " + std::to_string(id));

  DgpResult result;
  Points current = rest;
  std::vector<char> fixed(n, 0);
  std::vector<char> has_handle(mesh.component_count(), 0);
  for (const auto& [id, target] : handles) {
    fixed[id] = 1;
    current.row(id) = target.transpose();
    has_handle[mesh.component_ids()[id]] = 1;
  }
  for (int c = 0; c < mesh.component_count(); ++c)
    if (!has_handle[c]) result.anchored_components.push_back(c);
  for (int i = 0; i < n; ++i)
    if (!has_handle[mesh.component_ids()[i]]) fixed[i] = 1;

  std::vector<int> free_index(n, -1);
  int free_count = 0;
  for (int i = 0; i < n; ++i)
    if (!fixed[i]) free_index[i] = free_count++;

  // L_FF x = b_F / 2 - L_FC v_C
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::SparseMatrix<double> Lff(free_count, free_count), Lfc(free_count, n);
  std::vector<Eigen::Triplet<double>> trip_fc;
  for (int k = 0; k < L.matrix.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(L.matrix, k); it; ++it) {
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      if (free_index[r] < 0) continue;
      if (free_index[c] >= 0) trip.emplace_back(free_index[r], free_index[c], it.value());
      else trip_fc.emplace_back(free_index[r], c, it.value());
    }
  Lff.setFromTriplets(trip.begin(), trip.end());
  Lfc.setFromTriplets(trip_fc.begin(), trip_fc.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  if (free_count > 0) {
    solver.compute(Lff);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "DGP system factorization failed");
  }
  Points fixed_positions = Points::Zero(n, d);
  for (int i = 0; i < n; ++i)
    if (fixed[i]) fixed_positions.row(i) = current.row(i);
  const Points fixed_part = Lfc * fixed_positions;

  RotationField R = fit_rotations(mesh, L, rest, current);
  double energy = arap_energy(mesh, L, rest, current, R);
  result.energies.push_back(energy);
  for (int it = 0; it < options.max_iterations && free_count > 0; ++it) {
    const Points b = arap_rhs(mesh, L, rest, R);
    Points rhs(free_count, d);
    for (int i = 0; i < n; ++i)
      if (free_index[i] >= 0) rhs.row(free_index[i]) = 0.5 * b.row(i);
    rhs -= fixed_part;
    const Points x = solver.solve(rhs);
    for (int i = 0; i < n; ++i)
      if (free_index[i] >= 0) current.row(i) = x.row(free_index[i]);
    R = fit_rotations(mesh, L, rest, current);
    const double next = arap_energy(mesh, L, rest, current, R);
    result.energies.push_back(next);
    const double change = std::abs(energy - next) / std::max(energy, 1e-300);
    energy = next;
    if (change < options.rel_tolerance) break;
  }
  result.vertices = std::move(current);
  return result;
}

}  // namespace lpffd
