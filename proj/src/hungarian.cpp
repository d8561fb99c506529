#include "toothlift/hungarian.hpp"

#include <limits>

#include "toothlift/error.hpp"

namespace toothlift {

AssignmentResult hungarian_dense(const Eigen::MatrixXd& costs) {
  const auto rows = static_cast<int>(costs.rows()), cols = static_cast<int>(costs.cols());
  if (rows == 0 || cols == 0) throw ArgumentError("cost matrix is empty");
  if (!costs.allFinite()) throw ArgumentError("cost matrix has non-finite entries");

  const int n = std::max(rows, cols);
  const double pad = 1.0 + costs.cwiseAbs().maxCoeff() * rows * cols;
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, pad);
  a.topLeftCorner(rows, cols) = costs;

  // Shortest augmenting paths with row/column potentials; 1-based with
  // column 0 as the virtual start.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = a(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> col_of_row(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) col_of_row[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;

  AssignmentResult out;
  for (int r = 0; r < rows; ++r) {
    const int c = col_of_row[static_cast<std::size_t>(r)];
    if (c < cols) {
      out.pairs.emplace_back(r, c);
      out.total_cost += costs(r, c);
    }
  }
  return out;
}

}  // namespace toothlift
