#pragma once

#include <Eigen/Core>

#include <utility>
#include <vector>

namespace toothlift {

/// One-to-one assignment between cost-matrix rows and columns.
struct AssignmentResult {
  std::vector<std::pair<int, int>> pairs;  // (row, column), ascending by row
  double total_cost = 0.0;
};

/// Minimum-cost assignment of min(R, C) pairs (Kuhn-Munkres with
/// potentials, O(n^3)). Rectangular inputs are padded to square with a
/// constant larger than any achievable real total. ArgumentError for an empty
/// matrix or non-finite entries.
template <typename Derived>
AssignmentResult hungarian(const Eigen::MatrixBase<Derived>& costs);

AssignmentResult hungarian_dense(const Eigen::MatrixXd& costs);

template <typename Derived>
AssignmentResult hungarian(const Eigen::MatrixBase<Derived>& costs) {
  return hungarian_dense(costs.template cast<double>());
}

}  // namespace toothlift
