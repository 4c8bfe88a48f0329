#pragma once

#include <array>

#include "lpffd/solver.hpp"

namespace lpffd {

struct StationarityCheck {
  double max_gradient = 0.0;  // max |dE/dP| over all handle coordinates
  double scale = 0.0;         // max over coordinates of sum_terms |d(lambda E_term)/dP|
  double step = 1e-6;
  double floor = 0.0;         // roundoff level below which a gradient counts as zero
  bool passed = false;
};

/// Central-difference gradient of the weighted objective at P with the
/// rotations frozen. At a solver output this should vanish relative to the
/// size of the individual term gradients it balances. At an unforced rest
/// state every term gradient vanishes, so a roundoff floor of 1e-10 x model
/// scale is accepted as zero.
inline StationarityCheck stationarity_check(const TriMesh& mesh, const EmbeddingWeights& W, const LaplacianMatrix& L,
                                            const HandleSet& handles, const SolverConfig& config,
                                            const Points& rest_handles, const Points& P, const RotationField& R,
                                            double step = 1e-6, double tolerance = 1e-5) {
  StationarityCheck out;
  out.step = step;
  auto terms = [&](const Points& Q) {
    const EnergyTerms e = energy_with_rotations(mesh, W, L, handles, config, rest_handles, Q, R);
    return std::array<double, 4>{config.lambda_ml * e.ml, config.lambda_mp * e.mp, config.lambda_gp * e.gp,
                                 config.lambda_gr * e.gr};
  };
  Points Q = P;
  for (int h = 0; h < P.rows(); ++h)
    for (int a = 0; a < P.cols(); ++a) {
      Q(h, a) = P(h, a) + step;
      const auto plus = terms(Q);
      Q(h, a) = P(h, a) - step;
      const auto minus = terms(Q);
      Q(h, a) = P(h, a);
      double g = 0.0, s = 0.0;
      for (int k = 0; k < 4; ++k) {
        const double gk = (plus[k] - minus[k]) / (2.0 * step);
        g += gk;
        s += std::abs(gk);
      }
      out.max_gradient = std::max(out.max_gradient, std::abs(g));
      out.scale = std::max(out.scale, s);
    }
  out.floor = 1e-10 * model_scale(mesh.vertices());
  out.passed = out.max_gradient <= tolerance * out.scale || out.max_gradient <= out.floor;
  return out;
}

}  // namespace lpffd
