#pragma once

#include <cstdint>
#include <span>

#include "funcdict/geometry.hpp"
#include "funcdict/matrix.hpp"
#include "funcdict/model.hpp"

namespace funcdict {

struct TrainConfig {
  std::size_t k = 10;
  double gamma = 1.0;  // l2,1 weight
  double eta = 1e-3;   // learning rate
  ConstraintMode mode = ConstraintMode::Segmentation;
  std::size_t batch_size = 8;
  std::size_t epochs = 20;
  double sigma = 0.001;            // keypoint distance sharpness
  double noise_prob = 0.0;         // indicator bit-flip probability
  double partial_fraction = 0.0;   // blacklisted (shape, part) fraction
  bool siamese = false;
  std::uint64_t seed = 0;
};

struct StepMetrics {
  double f_mean = 0.0;    // mean projection error ||Ax - f||^2
  double l21_mean = 0.0;  // mean l2,1 value
  double loss = 0.0;      // f_mean + gamma * l21_mean
  std::size_t solver_iterations = 0;
  bool solver_converged = true;
};

// Sum of Euclidean norms of the columns.
double l21_norm(const Matrix& a);

// ||Ax - f||^2 + gamma * l21_norm(A).
double loss_value(const Matrix& a, const Vector& x, const Vector& f, double gamma);

// 2 (Ax - f) xᵀ + gamma * a_j / max(||a_j||, 1e-9) per column.
Matrix grad_wrt_A(const Matrix& a, const Vector& x, const Vector& f, double gamma);

struct TrainSample {
  const ShapeSample* shape = nullptr;
  ProbeFunction probe;
};

// One alternating step: per sample forward -> inner solve (box-constrained
// for Segmentation/Keypoint, ridge for SmoothMap) -> gradient at fixed x ->
// backprop; gradients are averaged over the batch, then one Adam update.
StepMetrics train_step(ModelParams& params, OptimizerState& state,
                       std::span<const TrainSample> batch, const TrainConfig& cfg);

struct SiamesePair {
  const ShapeSample* first = nullptr;
  ProbeFunction first_probe;
  const ShapeSample* second = nullptr;
  ProbeFunction second_probe;
};

// Siamese variant: the pair shares one coefficient vector; both residual
// gradients flow into the same parameters.
StepMetrics train_step_siamese(ModelParams& params, OptimizerState& state,
                               std::span<const SiamesePair> batch,
                               const TrainConfig& cfg);

}  // namespace funcdict
