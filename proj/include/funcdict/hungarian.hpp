#pragma once

#include <cstddef>
#include <vector>

#include "funcdict/matrix.hpp"

namespace funcdict {

// Injective assignment of rows to columns. row_to_col[i] == -1 when row i is
// unassigned (only possible for rectangular input with more rows than columns).
struct Assignment {
  std::vector<std::ptrdiff_t> row_to_col;
  double total_profit = 0.0;
};

// Maximum-profit assignment. Rectangular matrices are padded with zero profit,
// so min(rows, cols) pairs are returned. Throws InvalidInputError on
// non-finite entries.
Assignment hungarian_max(const Matrix& profit);

}  // namespace funcdict
