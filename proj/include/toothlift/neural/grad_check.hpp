#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "toothlift/error.hpp"
#include "toothlift/neural/feature_map.hpp"

namespace toothlift::neural {

inline constexpr double kGradCheckTolerance = 1e-4;
inline constexpr double kGradCheckStep = 1e-5;

template <typename Scalar>
struct GradCheckResult {
  Scalar max_relative_error = 0;
  Eigen::Index worst_coordinate = -1;
  Vector<Scalar> numeric;
};

/// Central differences of `f` around `x` against `analytic`; relative error
/// per coordinate is |a - n| / max(|a|, |n|, 1e-8).
template <typename Scalar>
GradCheckResult<Scalar> grad_check(const std::function<Scalar(const Vector<Scalar>&)>& f,
                                   const Vector<Scalar>& analytic, const Vector<Scalar>& x,
                                   Scalar eps = Scalar(kGradCheckStep)) {
  if (!(eps > Scalar(0))) throw ArgumentError("finite-difference step must be positive");
  if (analytic.size() != x.size()) throw ArgumentError("analytic gradient length differs from the point");
  if (!analytic.allFinite()) throw NumericError("analytic gradient is not finite");
  const auto eval = [&](const Vector<Scalar>& at) {
    const Scalar v = f(at);
    if (!std::isfinite(static_cast<double>(v))) throw NumericError("function value is not finite");
    return v;
  };
  eval(x);
  GradCheckResult<Scalar> out;
  out.numeric.resize(x.size());
  Vector<Scalar> probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const Scalar plus = eval(probe);
    probe[i] = x[i] - eps;
    const Scalar minus = eval(probe);
    probe[i] = x[i];
    const Scalar n = (plus - minus) / (Scalar(2) * eps);
    out.numeric[i] = n;
    const Scalar denom = std::max({std::abs(analytic[i]), std::abs(n), Scalar(1e-8)});
    const Scalar err = std::abs(analytic[i] - n) / denom;
    if (err > out.max_relative_error || out.worst_coordinate < 0) {
      out.max_relative_error = err;
      out.worst_coordinate = i;
    }
  }
  return out;
}

/// One registered differentiable operation and its check outcome.
struct GradCheckEntry {
  std::string name;
  double max_relative_error = 0.0;
  Eigen::Index coordinates = 0;
  bool passed() const { return max_relative_error < kGradCheckTolerance; }
};

struct GradCheckOptions {
  std::uint64_t seed = 0;
  double eps = kGradCheckStep;
  /// Names of operations whose analytic gradient is deliberately scaled by 2.
  std::vector<std::string> faults;
};

/// Names of every operation the suite checks, in report order.
std::vector<std::string> gradcheck_operations();

/// Runs the finite-difference check for every registered operation.
std::vector<GradCheckEntry> run_gradcheck_suite(const GradCheckOptions& options = {});

nlohmann::json gradcheck_report(const std::vector<GradCheckEntry>& entries);

}  // namespace toothlift::neural
