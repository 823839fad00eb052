#pragma once

#include <cstddef>

#include "funcdict/matrix.hpp"

namespace funcdict {

struct SolveReport {
  double residual = 0.0;  // ||Ax - f||^2 at the returned x
  std::size_t iterations = 0;
  bool converged = true;
  double kkt_violation = 0.0;
};

struct BoxLsResult {
  Vector x;
  SolveReport report;
};

struct BoxLsOptions {
  double lower = 0.0;
  double upper = 1.0;
  const Vector* start = nullptr;  // warm start, clamped to the box
};

// min ||Ax - f||^2 over the box [lower, upper]^k. Accelerated projected
// gradient with an exact active-set polish; an unmet iteration cap is
// reported as converged = false, never thrown.
BoxLsResult solve_box_ls(const Matrix& a, const Vector& f,
                         const BoxLsOptions& opts = {});

// x = (AᵀA + eps I)⁻¹ Aᵀ f via Cholesky. Throws NumericError when singular.
Vector solve_ridge_ls(const Matrix& a, const Vector& f, double eps = 1e-9);

// min ||A1 x - f1||^2 + ||A2 x - f2||^2 over [0,1]^k with a shared x.
BoxLsResult solve_shared_box_ls(const Matrix& a1, const Vector& f1,
                                const Matrix& a2, const Vector& f2);

}  // namespace funcdict
