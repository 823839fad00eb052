#include "funcdict/loss.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "funcdict/errors.hpp"
#include "funcdict/solver.hpp"

namespace funcdict {
namespace {

struct SampleResult {
  Gradients grads;
  double f_value = 0.0;
  double l21_value = 0.0;
  std::size_t solver_iterations = 0;
  bool solver_converged = true;
};

Vector inner_solve(const Matrix& a, const Vector& f, ConstraintMode mode,
                   SampleResult& out) {
  if (mode == ConstraintMode::SmoothMap) {
    return solve_ridge_ls(a, f);
  }
  BoxLsResult r = solve_box_ls(a, f);
  out.solver_iterations = r.report.iterations;
  out.solver_converged = r.report.converged;
  return std::move(r.x);
}

}  // namespace

double l21_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) col += a(i, j) * a(i, j);
    s += std::sqrt(col);
  }
  return s;
}

double loss_value(const Matrix& a, const Vector& x, const Vector& f, double gamma) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double r = dot(a.row(i), x) - f[i];
    s += r * r;
  }
  return s + gamma * l21_norm(a);
}

Matrix grad_wrt_A(const Matrix& a, const Vector& x, const Vector& f, double gamma) {
  const std::size_t n = a.rows();
  const std::size_t k = a.cols();
  Matrix g(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = 2.0 * (dot(a.row(i), x) - f[i]);
    auto gi = g.row(i);
    for (std::size_t j = 0; j < k; ++j) gi[j] = r * x[j];
  }
  if (gamma != 0.0) {
    for (std::size_t j = 0; j < k; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < n; ++i) col += a(i, j) * a(i, j);
      const double denom = std::max(std::sqrt(col), 1e-9);
      for (std::size_t i = 0; i < n; ++i) g(i, j) += gamma * a(i, j) / denom;
    }
  }
  return g;
}

StepMetrics train_step(ModelParams& params, OptimizerState& state,
                       std::span<const TrainSample> batch, const TrainConfig& cfg) {
  if (batch.empty()) throw InvalidInputError("train_step: empty batch");
  const std::size_t b = batch.size();
  std::vector<SampleResult> results(b);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(b); ++s) {
    const TrainSample& sample = batch[static_cast<std::size_t>(s)];
    SampleResult& res = results[static_cast<std::size_t>(s)];
    ForwardResult fwd = forward(params, sample.shape->cloud, cfg.mode);
    const Vector x = inner_solve(fwd.dictionary, sample.probe.values, cfg.mode, res);
    const Matrix dA =
        grad_wrt_A(fwd.dictionary, x, sample.probe.values, cfg.gamma);
    res.grads = backward(params, fwd.trace, dA);
    double f_val = 0.0;
    for (std::size_t i = 0; i < fwd.dictionary.rows(); ++i) {
      const double r = dot(fwd.dictionary.row(i), x) - sample.probe.values[i];
      f_val += r * r;
    }
    res.f_value = f_val;
    res.l21_value = l21_norm(fwd.dictionary);
  }

  StepMetrics metrics;
  Gradients mean = zero_gradients(params.arch);
  for (std::size_t s = 0; s < b; ++s) {
    accumulate(mean, results[s].grads, 1.0 / static_cast<double>(b));
    metrics.f_mean += results[s].f_value / static_cast<double>(b);
    metrics.l21_mean += results[s].l21_value / static_cast<double>(b);
    metrics.solver_iterations += results[s].solver_iterations;
    metrics.solver_converged = metrics.solver_converged && results[s].solver_converged;
  }
  metrics.loss = metrics.f_mean + cfg.gamma * metrics.l21_mean;
  if (!std::isfinite(metrics.loss)) {
    for (std::size_t s = 0; s < b; ++s) {
      if (!std::isfinite(results[s].f_value) || !std::isfinite(results[s].l21_value))
        throw NumericError("train_step: non-finite loss at sample shape_id=" +
                           std::to_string(batch[s].shape->shape_id));
    }
    throw NumericError("train_step: non-finite loss");
  }
  state.cfg.eta = cfg.eta;
  adam_step(params, mean, state);
  return metrics;
}

StepMetrics train_step_siamese(ModelParams& params, OptimizerState& state,
                               std::span<const SiamesePair> batch,
                               const TrainConfig& cfg) {
  if (batch.empty()) throw InvalidInputError("train_step_siamese: empty batch");
  for (const SiamesePair& pair : batch) {
    if (pair.first == nullptr || pair.second == nullptr)
      throw InvalidInputError("train_step_siamese: unpaired sample");
  }
  const std::size_t b = batch.size();
  std::vector<SampleResult> results(b);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(b); ++s) {
    const SiamesePair& pair = batch[static_cast<std::size_t>(s)];
    SampleResult& res = results[static_cast<std::size_t>(s)];
    ForwardResult fwd1 = forward(params, pair.first->cloud, cfg.mode);
    ForwardResult fwd2 = forward(params, pair.second->cloud, cfg.mode);
    BoxLsResult shared = solve_shared_box_ls(fwd1.dictionary, pair.first_probe.values,
                                             fwd2.dictionary, pair.second_probe.values);
    res.solver_iterations = shared.report.iterations;
    res.solver_converged = shared.report.converged;
    const Matrix dA1 =
        grad_wrt_A(fwd1.dictionary, shared.x, pair.first_probe.values, cfg.gamma);
    const Matrix dA2 =
        grad_wrt_A(fwd2.dictionary, shared.x, pair.second_probe.values, cfg.gamma);
    res.grads = backward(params, fwd1.trace, dA1);
    accumulate(res.grads, backward(params, fwd2.trace, dA2), 1.0);
    res.f_value = shared.report.residual;
    res.l21_value = l21_norm(fwd1.dictionary) + l21_norm(fwd2.dictionary);
  }

  StepMetrics metrics;
  Gradients mean = zero_gradients(params.arch);
  for (std::size_t s = 0; s < b; ++s) {
    accumulate(mean, results[s].grads, 1.0 / static_cast<double>(b));
    metrics.f_mean += results[s].f_value / static_cast<double>(b);
    metrics.l21_mean += results[s].l21_value / static_cast<double>(b);
    metrics.solver_iterations += results[s].solver_iterations;
    metrics.solver_converged = metrics.solver_converged && results[s].solver_converged;
  }
  metrics.loss = metrics.f_mean + cfg.gamma * metrics.l21_mean;
  if (!std::isfinite(metrics.loss))
    throw NumericError("train_step_siamese: non-finite loss");
  state.cfg.eta = cfg.eta;
  adam_step(params, mean, state);
  return metrics;
}

}  // namespace funcdict
