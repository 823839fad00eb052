#include "funcdict/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "funcdict/errors.hpp"

namespace funcdict {
namespace {

// Classical O(n^3) cost-minimizing assignment with potentials, square input.
std::vector<std::size_t> assign_min_cost(const Matrix& cost) {
  const std::size_t n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);  // 1-based; 0 = none
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      std::size_t j1 = 0;
      double delta = inf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Assignment hungarian_max(const Matrix& profit) {
  const std::size_t r = profit.rows();
  const std::size_t c = profit.cols();
  if (r == 0 || c == 0) throw InvalidInputError("hungarian_max: empty matrix");
  if (!profit.all_finite())
    throw InvalidInputError("hungarian_max: non-finite entry");

  const std::size_t n = std::max(r, c);
  Matrix cost(n, n, 0.0);  // padded cells keep zero profit
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) cost(i, j) = -profit(i, j);

  const auto full = assign_min_cost(cost);

  Assignment out;
  out.row_to_col.assign(r, -1);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t j = full[i];
    if (j < c) {
      out.row_to_col[i] = static_cast<std::ptrdiff_t>(j);
      out.total_profit += profit(i, j);
    }
  }
  return out;
}

}  // namespace funcdict
