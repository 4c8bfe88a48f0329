#pragma once

#include <stdexcept>
#include <string>

namespace lpffd {

enum class ErrorCode {
  InvalidInput,
  Domain,
  DimensionMismatch,
  VertexOutsideGrid,
  DegenerateTriangle,
  NonPositiveDefinite,
  NumericalFailure,
  NotFound,
  UnknownId,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid_input";
    case ErrorCode::Domain: return "domain_error";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::VertexOutsideGrid: return "vertex_outside_grid";
    case ErrorCode::DegenerateTriangle: return "degenerate_triangle";
    case ErrorCode::NonPositiveDefinite: return "non_positive_definite";
    case ErrorCode::NumericalFailure: return "numerical_failure";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::UnknownId: return "unknown_id";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Vertex `vertex` lies outside the lattice box by `overshoot` (model units).
class VertexOutsideGrid : public Error {
 public:
  VertexOutsideGrid(int vertex, double overshoot)
      : Error(ErrorCode::VertexOutsideGrid,
              "vertex " + std::to_string(vertex) + " outside grid by " + std::to_string(overshoot)),
        vertex_(vertex),
        overshoot_(overshoot) {}
  int vertex() const noexcept { return vertex_; }
  double overshoot() const noexcept { return overshoot_; }

 private:
  int vertex_;
  double overshoot_;
};

}  // namespace lpffd
