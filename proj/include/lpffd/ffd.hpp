#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Sparse>

#include "lpffd/error.hpp"
#include "lpffd/geometry.hpp"

namespace lpffd {

/// B_a^b(x) = C(b,a) x^a (1-x)^(b-a).
inline double bernstein_basis(int a, int b, double x) {
  if (a < 0 || b < 0 || a > b) throw Error(ErrorCode::Domain, "bernstein_basis requires 0 <= a <= b");
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::Domain, "bernstein_basis requires x in [0,1]");
  const int k = std::min(a, b - a);
  double binom = 1.0;
  for (int i = 1; i <= k; ++i) binom = binom * (b - k + i) / i;
  return binom * std::pow(x, a) * std::pow(1.0 - x, b - a);
}

/// All degree-b basis values at x, via the triangular recurrence
/// B_j^k = (1-x) B_j^{k-1} + x B_{j-1}^{k-1}.
inline std::vector<double> bernstein_all(int b, double x) {
  std::vector<double> out(b + 1, 0.0);
  out[0] = 1.0;
  const double s = 1.0 - x;
  for (int k = 1; k <= b; ++k) {
    out[k] = x * out[k - 1];
    for (int j = k - 1; j >= 1; --j) out[j] = s * out[j] + x * out[j - 1];
    out[0] = s * out[0];
  }
  return out;
}

/// The FFD weight matrix: row i maps handle positions to vertex i.
struct EmbeddingWeights {
  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  Matrix matrix;

  int rows() const { return static_cast<int>(matrix.rows()); }
  int cols() const { return static_cast<int>(matrix.cols()); }

  /// Dense copy of row i.
  Eigen::RowVectorXd row(int i) const { return Eigen::RowVectorXd(matrix.row(i)); }
};

inline constexpr double kWeightDropTolerance = 1e-14;

/// Tensor-product Bernstein weights for per-vertex lattice parameters. Entries
/// below kWeightDropTolerance are dropped and the row is renormalized.
inline EmbeddingWeights build_weights(const Points& params, const std::vector<int>& dims) {
  const int d = static_cast<int>(dims.size());
  if (params.cols() != d) throw Error(ErrorCode::DimensionMismatch, "parameter dimension differs from dims");
  int handles = 1;
  for (int n : dims) {
    if (n < 2) throw Error(ErrorCode::InvalidInput, "every lattice axis needs at least 2 handles");
    handles *= n;
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(params.rows()) * handles);
  std::vector<std::vector<double>> axis(d);
  std::vector<std::pair<int, double>> row;
  for (int i = 0; i < params.rows(); ++i) {
    for (int a = 0; a < d; ++a) {
      const double u = params(i, a);
      if (!(u >= 0.0 && u <= 1.0))
        throw Error(ErrorCode::Domain, "lattice parameter of vertex " + std::to_string(i) + " outside [0,1]");
      axis[a] = bernstein_all(dims[a] - 1, u);
    }
    row.clear();
    double sum = 0.0;
    for (int h = 0; h < handles; ++h) {
      int rem = h;
      double w = 1.0;
      for (int a = d - 1; a >= 0; --a) {
        w *= axis[a][rem % dims[a]];
        rem /= dims[a];
      }
      if (w < kWeightDropTolerance) continue;
      row.emplace_back(h, w);
      sum += w;
    }
    for (const auto& [h, w] : row) triplets.emplace_back(i, h, w / sum);
  }
  EmbeddingWeights W;
  W.matrix.resize(params.rows(), handles);
  W.matrix.setFromTriplets(triplets.begin(), triplets.end());
  W.matrix.makeCompressed();
  return W;
}

/// Weights for a point set embedded in the rest box of `grid`.
inline EmbeddingWeights build_weights(const Points& vertices, const LatticeGrid& grid,
                                      OutsidePolicy policy = OutsidePolicy::Error) {
  return build_weights(embed(vertices, grid, policy), grid.dims());
}

/// V' = W P, per coordinate.
inline Points forward_ffd(const EmbeddingWeights& W, const Points& handles) {
  if (W.cols() != handles.rows())
    throw Error(ErrorCode::DimensionMismatch, "weight matrix has " + std::to_string(W.cols()) +
                                                  " columns but " + std::to_string(handles.rows()) + " handles given");
  return W.matrix * handles;
}

/// Evaluates the lattice polynomial at one parameter point by repeated
/// de Casteljau reduction, last axis first. Independent of build_weights.
inline Eigen::VectorXd de_casteljau(const std::vector<int>& dims, const Points& handles, const Eigen::VectorXd& param) {
  const int d = static_cast<int>(dims.size());
  Points work = handles;
  int count = static_cast<int>(handles.rows());
  for (int a = d - 1; a >= 0; --a) {
    const int n = dims[a];
    const double t = param[a];
    const int groups = count / n;
    for (int g = 0; g < groups; ++g) {
      const int base = g * n;
      for (int level = 1; level < n; ++level)
        for (int j = 0; j < n - level; ++j)
          work.row(base + j) = (1.0 - t) * work.row(base + j) + t * work.row(base + j + 1);
      work.row(g) = work.row(base);
    }
    count = groups;
  }
  return work.row(0).transpose();
}

/// Deforms a (possibly different) point set with a deformed lattice.
inline Points apply_grid(const LatticeGrid& grid, const Points& vertices, OutsidePolicy policy = OutsidePolicy::Error) {
  return forward_ffd(build_weights(vertices, grid, policy), grid.current());
}

inline Points apply_grid(const LatticeGrid& grid, const TriMesh& scene, OutsidePolicy policy = OutsidePolicy::Error) {
  return apply_grid(grid, scene.vertices(), policy);
}

}  // namespace lpffd
