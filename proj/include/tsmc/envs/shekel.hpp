#pragma once

#include <array>

#include "tsmc/energy.hpp"

namespace tsmc::envs {

/// Negative Shekel function with three centers:
///   E(theta) = -sum_i 1 / (||theta - c_i||^2 + s_i),
/// c1 = (2, 2), c2 = (-2, 2), c3 = (0, -2.5), s = (0.5, 0.5, 1.2).
/// The two symmetric centers are the global minima; c3 is a shallower local
/// minimum.
class ShekelEnergy final : public EnergyModel {
 public:
  static constexpr int kCenters = 3;

  ShekelEnergy() {
    centers_[0] = (Vector(2) << 2.0, 2.0).finished();
    centers_[1] = (Vector(2) << -2.0, 2.0).finished();
    centers_[2] = (Vector(2) << 0.0, -2.5).finished();
    widths_ = {0.5, 0.5, 1.2};
  }

  int dim() const override { return 2; }
  const Vector& center(int i) const { return centers_[static_cast<std::size_t>(i)]; }

  double value(const Vector& theta) const override {
    double e = 0.0;
    for (int i = 0; i < kCenters; ++i) {
      const double denom = (theta - centers_[static_cast<std::size_t>(i)]).squaredNorm() +
                           widths_[static_cast<std::size_t>(i)];
      e -= 1.0 / denom;
    }
    return e;
  }

  Vector gradient(const Vector& theta) const override {
    Vector grad = Vector::Zero(2);
    for (int i = 0; i < kCenters; ++i) {
      const Vector diff = theta - centers_[static_cast<std::size_t>(i)];
      const double denom = diff.squaredNorm() + widths_[static_cast<std::size_t>(i)];
      grad += 2.0 * diff / (denom * denom);
    }
    return grad;
  }

 private:
  std::array<Vector, kCenters> centers_;
  std::array<double, kCenters> widths_;
};

}  // namespace tsmc::envs
