#include <cmath>
#include <limits>

#include "seadet/detkernel.hpp"
#include "seadet/error.hpp"

namespace seadet {

// Shortest augmenting path Hungarian algorithm with row/column
// potentials, O(rows^2 * cols). Rows and columns are 1-based internally;
// column 0 is the virtual source of each augmentation.
Assignment solve_assignment(const Matrix& cost) {
  const int n = cost.rows;
  const int m = cost.cols;
  if (n > m) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot assign " + std::to_string(n) + " rows to " + std::to_string(m) +
                    " columns");
  }
  for (double v : cost.values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite cost");
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> row_of(static_cast<std::size_t>(m) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    row_of[0] = i;
    int j0 = 0;
    std::vector<double> min_to(static_cast<std::size_t>(m) + 1, kInf);
    std::vector<bool> used(static_cast<std::size_t>(m) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = row_of[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double reduced = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                               v[static_cast<std::size_t>(j)];
        if (reduced < min_to[static_cast<std::size_t>(j)]) {
          min_to[static_cast<std::size_t>(j)] = reduced;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (min_to[static_cast<std::size_t>(j)] < delta) {
          delta = min_to[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(row_of[sj])] += delta;
          v[sj] -= delta;
        } else {
          min_to[sj] -= delta;
        }
      }
      j0 = j1;
    } while (row_of[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      row_of[static_cast<std::size_t>(j0)] = row_of[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.column_for_row.assign(static_cast<std::size_t>(n), 0);
  for (int j = 1; j <= m; ++j) {
    const int r = row_of[static_cast<std::size_t>(j)];
    if (r != 0) out.column_for_row[static_cast<std::size_t>(r - 1)] = static_cast<std::size_t>(j - 1);
  }
  for (int r = 0; r < n; ++r) {
    out.total_cost += cost(r, static_cast<int>(out.column_for_row[static_cast<std::size_t>(r)]));
  }
  return out;
}

}  // namespace seadet
