#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tsmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Thrown when a forward simulation leaves the finite range. Carries the
/// stage at which the state became non-finite and, for batched energies,
/// the index of the offending initial state.
class RolloutDivergence : public std::runtime_error {
 public:
  RolloutDivergence(int step, int initial_state_index = -1)
      : std::runtime_error("rollout diverged at step " + std::to_string(step) +
                           (initial_state_index >= 0
                                ? " (initial state " + std::to_string(initial_state_index) + ")"
                                : std::string{})),
        step_(step),
        initial_state_index_(initial_state_index) {}

  int step() const { return step_; }
  int initial_state_index() const { return initial_state_index_; }

 private:
  int step_;
  int initial_state_index_;
};

class WeightError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// log(sum_i exp(x_i)) guarded against overflow. Entries equal to -inf are
/// ignored; returns -inf when every entry is -inf.
inline double log_sum_exp(const Vector& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) {
    if (m == -kInf) return -kInf;
    throw WeightError("log_sum_exp: non-finite input");
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace tsmc
