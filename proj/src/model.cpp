#include "funcdict/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "funcdict/errors.hpp"

namespace funcdict {
namespace {

Layer init_layer(std::size_t out, std::size_t in, RngStream& rng) {
  Layer l;
  l.w = Matrix(out, in);
  l.b.assign(out, 0.0);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& w : l.w.values()) w = stddev * rng.next_normal();
  return l;
}

void relu_forward(const Matrix& z, Matrix& a) {
  a = z;
  for (double& v : a.values()) v = v > 0.0 ? v : 0.0;
}

// y_i = W x_i + b for every row of x.
Matrix affine_rows(const Matrix& x, const Layer& l) {
  const std::size_t n = x.rows();
  const std::size_t out = l.w.rows();
  Matrix y(n, out);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    auto yi = y.row(i);
    for (std::size_t o = 0; o < out; ++o) yi[o] = dot(l.w.row(o), xi) + l.b[o];
  }
  return y;
}

void ensure_finite(const Matrix& m, const char* layer) {
  if (!m.all_finite())
    throw NumericError(std::string("forward: non-finite activation at layer ") +
                       layer);
}

void check_match(const ModelParams& params, const ForwardTrace& trace) {
  if (!(params.arch == trace.arch))
    throw InvalidStateError("backward: trace does not match parameters");
  if (params.l1.w.rows() != params.arch.h1 || params.l1.w.cols() != 3 ||
      params.l2.w.rows() != params.arch.h2 ||
      params.l2.w.cols() != params.arch.h1 ||
      params.l3.w.rows() != params.arch.h3 ||
      params.l3.w.cols() != 2 * params.arch.h2 ||
      params.l4.w.rows() != params.arch.k || params.l4.w.cols() != params.arch.h3)
    throw InvalidStateError("backward: parameter shapes inconsistent");
}

template <typename Fn>
void for_each_layer(Gradients& a, const Gradients& b, Fn&& fn) {
  fn(a.l1, b.l1);
  fn(a.l2, b.l2);
  fn(a.l3, b.l3);
  fn(a.l4, b.l4);
}

}  // namespace

ModelParams init_params(const Architecture& arch, RngStream& rng) {
  if (arch.k < 1) throw InvalidConfigError("init_params: k must be >= 1");
  if (arch.h1 < 1 || arch.h2 < 1 || arch.h3 < 1)
    throw InvalidConfigError("init_params: hidden widths must be >= 1");
  ModelParams p;
  p.arch = arch;
  p.l1 = init_layer(arch.h1, 3, rng);
  p.l2 = init_layer(arch.h2, arch.h1, rng);
  p.l3 = init_layer(arch.h3, 2 * arch.h2, rng);
  p.l4 = init_layer(arch.k, arch.h3, rng);
  return p;
}

ForwardResult forward(const ModelParams& params, const PointCloud& cloud,
                      ConstraintMode mode) {
  const std::size_t n = cloud.size();
  const Architecture& arch = params.arch;
  if (n < arch.k)
    throw InvalidInputError("forward: dictionary must be thin (n >= k)");

  ForwardTrace t;
  t.arch = arch;
  t.mode = mode;
  t.input = Matrix(n, 3);
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < 3; ++d) t.input(i, d) = cloud.points[i][d];

  t.z1 = affine_rows(t.input, params.l1);
  relu_forward(t.z1, t.a1);
  t.z2 = affine_rows(t.a1, params.l2);
  relu_forward(t.z2, t.a2);

  t.pooled.assign(arch.h2, -std::numeric_limits<double>::infinity());
  t.pool_argmax.assign(arch.h2, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = t.a2.row(i);
    for (std::size_t c = 0; c < arch.h2; ++c) {
      if (row[c] > t.pooled[c]) {  // strict: ties keep the lowest point index
        t.pooled[c] = row[c];
        t.pool_argmax[c] = i;
      }
    }
  }

  // z3_i = W3_local a2_i + (W3_global pooled + b3)
  Vector global_part(arch.h3);
  for (std::size_t o = 0; o < arch.h3; ++o) {
    double s = params.l3.b[o];
    const auto wo = params.l3.w.row(o);
    for (std::size_t c = 0; c < arch.h2; ++c) s += wo[arch.h2 + c] * t.pooled[c];
    global_part[o] = s;
  }
  t.z3 = Matrix(n, arch.h3);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a2i = t.a2.row(i);
    auto z3i = t.z3.row(i);
    for (std::size_t o = 0; o < arch.h3; ++o) {
      const auto wo = params.l3.w.row(o);
      double s = global_part[o];
      for (std::size_t c = 0; c < arch.h2; ++c) s += wo[c] * a2i[c];
      z3i[o] = s;
    }
  }
  relu_forward(t.z3, t.a3);
  t.logits = affine_rows(t.a3, params.l4);
  ensure_finite(t.logits, "head");

  const std::size_t k = arch.k;
  t.dictionary = Matrix(n, k);
  switch (mode) {
    case ConstraintMode::Segmentation: {
      for (std::size_t i = 0; i < n; ++i) {
        const auto zi = t.logits.row(i);
        auto ai = t.dictionary.row(i);
        const double m = *std::max_element(zi.begin(), zi.end());
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
          ai[j] = std::exp(zi[j] - m);
          sum += ai[j];
        }
        for (std::size_t j = 0; j < k; ++j) ai[j] /= sum;
      }
      break;
    }
    case ConstraintMode::Keypoint: {
      for (std::size_t j = 0; j < k; ++j) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) m = std::max(m, t.logits(i, j));
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          t.dictionary(i, j) = std::exp(t.logits(i, j) - m);
          sum += t.dictionary(i, j);
        }
        for (std::size_t i = 0; i < n; ++i) t.dictionary(i, j) /= sum;
      }
      break;
    }
    case ConstraintMode::SmoothMap: {
      t.column_norm.resize(k);
      t.column_scale.resize(k);
      for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += t.logits(i, j) * t.logits(i, j);
        const double nrm = std::sqrt(s);
        t.column_norm[j] = nrm;
        t.column_scale[j] = nrm < 1e-12 ? nrm + 1e-12 : nrm;
        for (std::size_t i = 0; i < n; ++i)
          t.dictionary(i, j) = t.logits(i, j) / t.column_scale[j];
      }
      break;
    }
  }
  ensure_finite(t.dictionary, "activation");

  ForwardResult out;
  out.dictionary = t.dictionary;
  out.trace = std::move(t);
  return out;
}

Gradients zero_gradients(const Architecture& arch) {
  Gradients g;
  g.l1.w = Matrix(arch.h1, 3);
  g.l1.b.assign(arch.h1, 0.0);
  g.l2.w = Matrix(arch.h2, arch.h1);
  g.l2.b.assign(arch.h2, 0.0);
  g.l3.w = Matrix(arch.h3, 2 * arch.h2);
  g.l3.b.assign(arch.h3, 0.0);
  g.l4.w = Matrix(arch.k, arch.h3);
  g.l4.b.assign(arch.k, 0.0);
  return g;
}

void accumulate(Gradients& acc, const Gradients& g, double scale) {
  for_each_layer(acc, g, [scale](Layer& a, const Layer& b) {
    for (std::size_t i = 0; i < a.w.values().size(); ++i)
      a.w.values()[i] += scale * b.w.values()[i];
    for (std::size_t i = 0; i < a.b.size(); ++i) a.b[i] += scale * b.b[i];
  });
}

double gradient_norm(const Gradients& g) {
  double s = 0.0;
  for (const Layer* l : {&g.l1, &g.l2, &g.l3, &g.l4}) {
    for (double x : l->w.values()) s += x * x;
    for (double x : l->b) s += x * x;
  }
  return std::sqrt(s);
}

Gradients backward(const ModelParams& params, const ForwardTrace& trace,
                   const Matrix& dLdA) {
  check_match(params, trace);
  const Architecture& arch = params.arch;
  const std::size_t n = trace.input.rows();
  const std::size_t k = arch.k;
  if (dLdA.rows() != n || dLdA.cols() != k)
    throw InvalidInputError("backward: dLdA shape mismatch");
  if (!dLdA.all_finite()) throw InvalidInputError("backward: non-finite dLdA");

  Gradients g = zero_gradients(arch);

  // Activation Jacobian.
  Matrix dz4(n, k);
  switch (trace.mode) {
    case ConstraintMode::Segmentation: {
      for (std::size_t i = 0; i < n; ++i) {
        const auto ai = trace.dictionary.row(i);
        const auto di = dLdA.row(i);
        const double inner = dot(ai, di);
        for (std::size_t j = 0; j < k; ++j) dz4(i, j) = ai[j] * (di[j] - inner);
      }
      break;
    }
    case ConstraintMode::Keypoint: {
      for (std::size_t j = 0; j < k; ++j) {
        double inner = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          inner += trace.dictionary(i, j) * dLdA(i, j);
        for (std::size_t i = 0; i < n; ++i)
          dz4(i, j) = trace.dictionary(i, j) * (dLdA(i, j) - inner);
      }
      break;
    }
    case ConstraintMode::SmoothMap: {
      for (std::size_t j = 0; j < k; ++j) {
        const double scale = trace.column_scale[j];
        const double ratio = trace.column_norm[j] / scale;
        double inner = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          inner += trace.dictionary(i, j) * dLdA(i, j);
        for (std::size_t i = 0; i < n; ++i)
          dz4(i, j) =
              (dLdA(i, j) - trace.dictionary(i, j) * inner * ratio) / scale;
      }
      break;
    }
  }

  // Head: logits_i = W4 a3_i + b4.
  Matrix da3(n, arch.h3, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a3i = trace.a3.row(i);
    const auto dzi = dz4.row(i);
    auto dai = da3.row(i);
    for (std::size_t o = 0; o < k; ++o) {
      const double d = dzi[o];
      if (d == 0.0) continue;
      g.l4.b[o] += d;
      auto gw = g.l4.w.row(o);
      const auto w = params.l4.w.row(o);
      for (std::size_t c = 0; c < arch.h3; ++c) {
        gw[c] += d * a3i[c];
        dai[c] += d * w[c];
      }
    }
  }

  // Through relu(z3) and the concat layer.
  Matrix da2(n, arch.h2, 0.0);
  Vector dpool(arch.h2, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z3i = trace.z3.row(i);
    const auto a2i = trace.a2.row(i);
    auto dai = da3.row(i);
    auto da2i = da2.row(i);
    for (std::size_t o = 0; o < arch.h3; ++o) {
      const double d = z3i[o] > 0.0 ? dai[o] : 0.0;
      if (d == 0.0) continue;
      g.l3.b[o] += d;
      auto gw = g.l3.w.row(o);
      const auto w = params.l3.w.row(o);
      for (std::size_t c = 0; c < arch.h2; ++c) {
        gw[c] += d * a2i[c];
        gw[arch.h2 + c] += d * trace.pooled[c];
        da2i[c] += d * w[c];
        dpool[c] += d * w[arch.h2 + c];
      }
    }
  }
  // Max-pool routes the pooled gradient to the argmax point per channel.
  for (std::size_t c = 0; c < arch.h2; ++c)
    da2(trace.pool_argmax[c], c) += dpool[c];

  Matrix da1(n, arch.h1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z2i = trace.z2.row(i);
    const auto a1i = trace.a1.row(i);
    const auto da2i = da2.row(i);
    auto da1i = da1.row(i);
    for (std::size_t o = 0; o < arch.h2; ++o) {
      const double d = z2i[o] > 0.0 ? da2i[o] : 0.0;
      if (d == 0.0) continue;
      g.l2.b[o] += d;
      auto gw = g.l2.w.row(o);
      const auto w = params.l2.w.row(o);
      for (std::size_t c = 0; c < arch.h1; ++c) {
        gw[c] += d * a1i[c];
        da1i[c] += d * w[c];
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto z1i = trace.z1.row(i);
    const auto xi = trace.input.row(i);
    const auto da1i = da1.row(i);
    for (std::size_t o = 0; o < arch.h1; ++o) {
      const double d = z1i[o] > 0.0 ? da1i[o] : 0.0;
      if (d == 0.0) continue;
      g.l1.b[o] += d;
      auto gw = g.l1.w.row(o);
      for (std::size_t c = 0; c < 3; ++c) gw[c] += d * xi[c];
    }
  }
  return g;
}

void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state) {
  // Validate before mutating anything so an aborted step leaves state intact.
  for (const Layer* l : {&grads.l1, &grads.l2, &grads.l3, &grads.l4}) {
    bool finite = l->w.all_finite();
    for (double x : l->b)
      if (!std::isfinite(x)) finite = false;
    if (!finite)
      throw NumericError("adam_step: non-finite gradient, step aborted");
  }

  if (!state.initialized) {
    state.m = zero_gradients(params.arch);
    state.v = zero_gradients(params.arch);
    state.initialized = true;
  }
  ++state.step;
  const AdamConfig& c = state.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));

  auto update = [&](Vector& p, const Vector& gvec, Vector& m, Vector& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gvec[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gvec[i] * gvec[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= c.eta * mhat / (std::sqrt(vhat) + c.eps);
    }
  };
  update(params.l1.w.values(), grads.l1.w.values(), state.m.l1.w.values(),
         state.v.l1.w.values());
  update(params.l1.b, grads.l1.b, state.m.l1.b, state.v.l1.b);
  update(params.l2.w.values(), grads.l2.w.values(), state.m.l2.w.values(),
         state.v.l2.w.values());
  update(params.l2.b, grads.l2.b, state.m.l2.b, state.v.l2.b);
  update(params.l3.w.values(), grads.l3.w.values(), state.m.l3.w.values(),
         state.v.l3.w.values());
  update(params.l3.b, grads.l3.b, state.m.l3.b, state.v.l3.b);
  update(params.l4.w.values(), grads.l4.w.values(), state.m.l4.w.values(),
         state.v.l4.w.values());
  update(params.l4.b, grads.l4.b, state.m.l4.b, state.v.l4.b);
}

}  // namespace funcdict
