#include "funcdict/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "funcdict/errors.hpp"

namespace funcdict {
namespace {

constexpr std::size_t kIterationCap = 10000;
constexpr double kGradTol = 1e-8;  // on the projected-gradient norm

double norm_inf(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// q(x) = xᵀGx - 2bᵀx (objective minus the constant ||f||²).
double quad_value(const Matrix& g, const Vector& b, const Vector& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const double gx = dot(g.row(i), x);
    s += x[i] * gx - 2.0 * b[i] * x[i];
  }
  return s;
}

Vector quad_grad(const Matrix& g, const Vector& b, const Vector& x) {
  Vector grad = matvec(g, x);
  for (std::size_t j = 0; j < grad.size(); ++j) grad[j] = 2.0 * (grad[j] - b[j]);
  return grad;
}

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// In-place SPD solve; returns false on a non-positive pivot.
bool cholesky_solve(Matrix g, Vector rhs, Vector& out) {
  const std::size_t n = g.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double d = g(j, j);
    for (std::size_t p = 0; p < j; ++p) d -= g(j, p) * g(j, p);
    if (d <= 0.0 || !std::isfinite(d)) return false;
    g(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = g(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= g(i, p) * g(j, p);
      g(i, j) = s / g(j, j);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[i];
    for (std::size_t p = 0; p < i; ++p) s -= g(i, p) * rhs[p];
    rhs[i] = s / g(i, i);
  }
  out.assign(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = rhs[ii];
    for (std::size_t p = ii + 1; p < n; ++p) s -= g(p, ii) * out[p];
    out[ii] = s / g(ii, ii);
  }
  return true;
}

double lipschitz_estimate(const Matrix& g) {
  const std::size_t k = g.rows();
  Vector v(k, 1.0 / std::sqrt(static_cast<double>(k)));
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    Vector w = matvec(g, v);
    const double len = norm(w);
    if (len < 1e-300) return 0.0;
    for (double& x : w) x /= len;
    v = std::move(w);
    lambda = dot(v, matvec(g, v));
  }
  return 2.0 * lambda;
}

struct KktInfo {
  double violation = 0.0;
  double scale = 1.0;  // 1 + ||Gx - b||_inf
};

KktInfo kkt_violation(const Matrix& g, const Vector& b, const Vector& x, double lo,
                      double hi) {
  const Vector grad = quad_grad(g, b, x);
  const double edge = 1e-9 * std::max(1.0, std::abs(hi - lo));
  KktInfo info;
  info.scale = 1.0 + 0.5 * norm_inf(grad);
  for (std::size_t j = 0; j < x.size(); ++j) {
    double v;
    if (x[j] <= lo + edge) {
      v = std::max(0.0, -grad[j]);
    } else if (x[j] >= hi - edge) {
      v = std::max(0.0, grad[j]);
    } else {
      v = std::abs(grad[j]);
    }
    info.violation = std::max(info.violation, v);
  }
  return info;
}

// Re-solve the reduced normal equations on the inferred free set; accepted
// only when the result is feasible and KKT-consistent.
bool active_set_polish(const Matrix& g, const Vector& b, double lo, double hi,
                       Vector& x) {
  const std::size_t k = x.size();
  const double edge = 1e-7 * std::max(1.0, std::abs(hi - lo));
  std::vector<int> state(k, 0);  // -1 at lower, +1 at upper, 0 free
  std::vector<std::size_t> free_idx;
  for (std::size_t j = 0; j < k; ++j) {
    if (x[j] <= lo + edge) {
      state[j] = -1;
    } else if (x[j] >= hi - edge) {
      state[j] = 1;
    } else {
      free_idx.push_back(j);
    }
  }
  Vector candidate(k);
  for (std::size_t j = 0; j < k; ++j)
    candidate[j] = state[j] == -1 ? lo : (state[j] == 1 ? hi : 0.0);
  if (!free_idx.empty()) {
    Matrix gf(free_idx.size(), free_idx.size());
    Vector rhs(free_idx.size());
    for (std::size_t a = 0; a < free_idx.size(); ++a) {
      double s = b[free_idx[a]];
      for (std::size_t j = 0; j < k; ++j)
        if (state[j] != 0) s -= g(free_idx[a], j) * candidate[j];
      rhs[a] = s;
      for (std::size_t c = 0; c < free_idx.size(); ++c)
        gf(a, c) = g(free_idx[a], free_idx[c]);
    }
    Vector xf;
    if (!cholesky_solve(std::move(gf), std::move(rhs), xf)) return false;
    for (std::size_t a = 0; a < free_idx.size(); ++a) {
      if (xf[a] < lo - 1e-12 || xf[a] > hi + 1e-12) return false;
      candidate[free_idx[a]] = clamp(xf[a], lo, hi);
    }
  }
  const KktInfo info = kkt_violation(g, b, candidate, lo, hi);
  if (info.violation > kGradTol * info.scale) return false;
  x = candidate;
  return true;
}

struct QuadBoxResult {
  Vector x;
  std::size_t iterations = 0;
  bool converged = true;
  double kkt = 0.0;
};

QuadBoxResult solve_box_quadratic(const Matrix& g, const Vector& b, double lo,
                                  double hi, const Vector* start) {
  const std::size_t k = b.size();
  QuadBoxResult res;
  const double big = lipschitz_estimate(g);
  if (big < 1e-300) {
    // G vanishes: objective is linear, optimum at a box corner.
    res.x.resize(k);
    for (std::size_t j = 0; j < k; ++j)
      res.x[j] = b[j] > 0.0 ? hi : (b[j] < 0.0 ? lo : clamp(0.0, lo, hi));
    res.kkt = kkt_violation(g, b, res.x, lo, hi).violation;
    return res;
  }
  const double step = 1.0 / (1.01 * big);

  Vector x(k);
  if (start != nullptr && start->size() == k) {
    for (std::size_t j = 0; j < k; ++j) x[j] = clamp((*start)[j], lo, hi);
  } else {
    const double mid = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi) : 0.0;
    x.assign(k, clamp(mid, lo, hi));
  }
  Vector y = x;
  double t = 1.0;
  double fx = quad_value(g, b, x);

  std::size_t it = 0;
  for (; it < kIterationCap; ++it) {
    const Vector grad_y = quad_grad(g, b, y);
    Vector x_new(k);
    for (std::size_t j = 0; j < k; ++j)
      x_new[j] = clamp(y[j] - step * grad_y[j], lo, hi);
    const double fx_new = quad_value(g, b, x_new);
    if (fx_new > fx) {  // non-monotone: restart momentum from the incumbent
      y = x;
      t = 1.0;
      const Vector grad_x = quad_grad(g, b, x);
      double pg = 0.0;
      for (std::size_t j = 0; j < k; ++j)
        pg = std::max(pg, std::abs(x[j] - clamp(x[j] - grad_x[j], lo, hi)));
      if (pg <= kGradTol * 1e-2) break;
      continue;
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    double pg = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double momentum = (t - 1.0) / t_new * (x_new[j] - x[j]);
      y[j] = clamp(x_new[j] + momentum, lo, hi);
      pg = std::max(pg, std::abs(x_new[j] - x[j]));
    }
    const bool tiny_move = pg <= kGradTol * 1e-4 * step;
    x = std::move(x_new);
    fx = fx_new;
    t = t_new;
    const KktInfo info = kkt_violation(g, b, x, lo, hi);
    if (info.violation <= kGradTol * 1e-2 || tiny_move) break;
  }
  res.iterations = it;

  active_set_polish(g, b, lo, hi, x);
  const KktInfo info = kkt_violation(g, b, x, lo, hi);
  res.x = std::move(x);
  res.kkt = info.violation;
  res.converged = info.violation <= kGradTol * info.scale;
  return res;
}

double residual_norm2(const Matrix& a, const Vector& f, const Vector& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double r = dot(a.row(i), x) - f[i];
    s += r * r;
  }
  return s;
}

void check_inputs(const Matrix& a, const Vector& f, const char* where) {
  if (a.rows() != f.size())
    throw InvalidInputError(std::string(where) + ": shape mismatch");
  if (!a.all_finite()) throw InvalidInputError(std::string(where) + ": non-finite A");
  for (double v : f)
    if (!std::isfinite(v))
      throw InvalidInputError(std::string(where) + ": non-finite f");
}

}  // namespace

BoxLsResult solve_box_ls(const Matrix& a, const Vector& f, const BoxLsOptions& opts) {
  check_inputs(a, f, "solve_box_ls");
  const Matrix g = gram(a);
  const Vector b = tmatvec(a, f);
  QuadBoxResult qr = solve_box_quadratic(g, b, opts.lower, opts.upper, opts.start);
  BoxLsResult out;
  out.report.residual = residual_norm2(a, f, qr.x);
  out.report.iterations = qr.iterations;
  out.report.converged = qr.converged;
  out.report.kkt_violation = qr.kkt;
  out.x = std::move(qr.x);
  return out;
}

Vector solve_ridge_ls(const Matrix& a, const Vector& f, double eps) {
  check_inputs(a, f, "solve_ridge_ls");
  if (eps < 0.0) throw InvalidConfigError("solve_ridge_ls: eps must be >= 0");
  Matrix g = gram(a);
  for (std::size_t j = 0; j < g.rows(); ++j) g(j, j) += eps;
  Vector x;
  if (!cholesky_solve(std::move(g), tmatvec(a, f), x))
    throw NumericError("solve_ridge_ls: normal equations numerically singular");
  return x;
}

BoxLsResult solve_shared_box_ls(const Matrix& a1, const Vector& f1, const Matrix& a2,
                                const Vector& f2) {
  check_inputs(a1, f1, "solve_shared_box_ls");
  check_inputs(a2, f2, "solve_shared_box_ls");
  if (a1.cols() != a2.cols())
    throw InvalidInputError("solve_shared_box_ls: dictionaries disagree on k");
  Matrix g = gram(a1);
  const Matrix g2 = gram(a2);
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) += g2(i, j);
  Vector b = tmatvec(a1, f1);
  const Vector b2 = tmatvec(a2, f2);
  for (std::size_t j = 0; j < b.size(); ++j) b[j] += b2[j];

  QuadBoxResult qr = solve_box_quadratic(g, b, 0.0, 1.0, nullptr);
  BoxLsResult out;
  out.report.residual = residual_norm2(a1, f1, qr.x) + residual_norm2(a2, f2, qr.x);
  out.report.iterations = qr.iterations;
  out.report.converged = qr.converged;
  out.report.kkt_violation = qr.kkt;
  out.x = std::move(qr.x);
  return out;
}

}  // namespace funcdict
