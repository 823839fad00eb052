#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "funcdict/geometry.hpp"
#include "funcdict/matrix.hpp"
#include "funcdict/rng.hpp"

namespace funcdict {

enum class ConstraintMode { Segmentation, Keypoint, SmoothMap };

// Per-point encoder: 3 -> h1 -> h2 per point, global max-pool of the h2
// feature, concat to 2*h2 per point, then 2*h2 -> h3 -> k head.
struct Architecture {
  std::size_t k = 10;
  std::size_t h1 = 64;
  std::size_t h2 = 64;
  std::size_t h3 = 64;

  bool operator==(const Architecture&) const = default;
};

struct Layer {
  Matrix w;  // out x in
  Vector b;
};

struct ModelParams {
  Architecture arch;
  Layer l1, l2, l3, l4;  // l3 input is [local h2 | pooled h2]
};

// Fan-in-scaled normal weights, zero biases. Deterministic given the stream.
ModelParams init_params(const Architecture& arch, RngStream& rng);

struct ForwardTrace {
  Architecture arch;
  ConstraintMode mode = ConstraintMode::Segmentation;
  Matrix input;       // n x 3
  Matrix z1, z2, z3;  // pre-activations
  Matrix a1, a2, a3;  // rectified activations
  Vector pooled;      // h2, max over points
  std::vector<std::size_t> pool_argmax;  // per channel, lowest index on ties
  Matrix logits;      // n x k, pre-activation head output
  Matrix dictionary;  // n x k after the mode activation
  Vector column_scale;  // SmoothMap: divisor per column (norm, guarded)
  Vector column_norm;   // SmoothMap: raw pre-normalization column norm
};

struct ForwardResult {
  Matrix dictionary;
  ForwardTrace trace;
};

// Mode activations: row-wise softmax (Segmentation), column-wise softmax
// (Keypoint), column-wise Euclidean normalization (SmoothMap; columns with
// norm < 1e-12 get 1e-12 added to the divisor).
ForwardResult forward(const ModelParams& params, const PointCloud& cloud,
                      ConstraintMode mode);

struct Gradients {
  Layer l1, l2, l3, l4;
};

// Exact gradients of <dLdA, A(Θ)> through the activation Jacobians and the
// max-pool routing. The trace must come from a forward with these params.
Gradients backward(const ModelParams& params, const ForwardTrace& trace,
                   const Matrix& dLdA);

Gradients zero_gradients(const Architecture& arch);
void accumulate(Gradients& acc, const Gradients& g, double scale);
double gradient_norm(const Gradients& g);

struct AdamConfig {
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamConfig cfg;
  Gradients m, v;  // first/second moments, zero-initialized
  std::size_t step = 0;
  bool initialized = false;
};

// Standard Adam with bias correction; throws NumericError (no mutation) on
// non-finite gradients.
void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state);

}  // namespace funcdict
