#include "funcdict/sym_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "funcdict/errors.hpp"

namespace funcdict {
namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition sym_eigen(const Matrix& s) {
  const std::size_t m = s.rows();
  if (m == 0 || s.rows() != s.cols())
    throw InvalidInputError("sym_eigen: matrix must be square and nonempty");
  if (!s.all_finite()) throw InvalidInputError("sym_eigen: non-finite entry");
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (std::abs(s(i, j) - s(j, i)) > 1e-9)
        throw InvalidInputError("sym_eigen: asymmetric input");

  Matrix a = s;
  // Symmetrize exactly so rotations preserve symmetry bit-for-bit.
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const double avg = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = avg;
      a(j, i) = avg;
    }
  Matrix v = Matrix::identity(m);

  const double stop = 1e-12 * std::max(1.0, frobenius(a));
  for (int sweep = 0; sweep < 100; ++sweep) {
    if (off_diagonal_norm(a) <= stop) break;
    for (std::size_t p = 0; p + 1 < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t i = 0; i < m; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - sn * aiq;
          a(i, q) = sn * aip + c * aiq;
        }
        for (std::size_t j = 0; j < m; ++j) {
          const double apj = a(p, j), aqj = a(q, j);
          a(p, j) = c * apj - sn * aqj;
          a(q, j) = sn * apj + c * aqj;
        }
        for (std::size_t i = 0; i < m; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - sn * viq;
          v(i, q) = sn * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  EigenDecomposition out;
  out.eigenvalues.resize(m);
  out.eigenvectors = Matrix(m, m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t src = order[j];
    out.eigenvalues[j] = a(src, src);
    double sign = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (std::abs(v(i, src)) > 1e-12) {
        sign = v(i, src) > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (std::size_t i = 0; i < m; ++i) out.eigenvectors(i, j) = sign * v(i, src);
  }
  return out;
}

}  // namespace funcdict
