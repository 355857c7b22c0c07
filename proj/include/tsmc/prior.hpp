#pragma once

#include <cmath>
#include <stdexcept>

#include "tsmc/common.hpp"
#include "tsmc/rng.hpp"

namespace tsmc {

/// Sampleable density with full support on R^d. Gradients of the log-density
/// are required because the tempered potentials feed them to gradient-based
/// kernels.
class Prior {
 public:
  virtual ~Prior() = default;
  virtual int dim() const = 0;
  virtual double log_density(const Vector& theta) const = 0;
  virtual Vector grad_log_density(const Vector& theta) const = 0;
  virtual Vector sample(RngStream& rng) const = 0;
};

/// Isotropic Gaussian N(mean, sigma^2 I).
class GaussianIidPrior final : public Prior {
 public:
  GaussianIidPrior(Vector mean, double sigma) : mean_(std::move(mean)), sigma_(sigma) {
    if (sigma_ <= 0.0) throw std::invalid_argument("GaussianIidPrior: sigma must be > 0");
  }
  GaussianIidPrior(int dim, double sigma) : GaussianIidPrior(Vector::Zero(dim), sigma) {}

  int dim() const override { return static_cast<int>(mean_.size()); }
  double sigma() const { return sigma_; }
  const Vector& mean() const { return mean_; }

  double log_density(const Vector& theta) const override {
    check_dim(theta);
    const double n = static_cast<double>(theta.size());
    const double quad = (theta - mean_).squaredNorm() / (sigma_ * sigma_);
    return -0.5 * (n * std::log(2.0 * M_PI * sigma_ * sigma_) + quad);
  }

  Vector grad_log_density(const Vector& theta) const override {
    check_dim(theta);
    return -(theta - mean_) / (sigma_ * sigma_);
  }

  Vector sample(RngStream& rng) const override {
    Vector out(mean_.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = mean_[i] + sigma_ * rng.normal();
    return out;
  }

 private:
  void check_dim(const Vector& theta) const {
    if (theta.size() != mean_.size())
      throw std::invalid_argument("GaussianIidPrior: dimension mismatch");
  }

  Vector mean_;
  double sigma_;
};

enum class Ar1Init { zero, stationary };

/// First-order autoregressive prior over an open-loop control sequence
/// theta = (u_0, ..., u_{T-1}), u_t in R^m, flattened time-major:
///   u_t = gamma * u_{t-1} + eps_t,  eps_t ~ N(0, sigma^2 I),  u_{-1} = 0.
/// With Ar1Init::stationary the first control is instead drawn from the
/// stationary marginal N(0, sigma^2 / (1 - gamma^2) I).
class Ar1ControlPrior final : public Prior {
 public:
  Ar1ControlPrior(double gamma, double sigma, int horizon, int control_dim,
                  Ar1Init init = Ar1Init::zero)
      : gamma_(gamma), sigma_(sigma), horizon_(horizon), control_dim_(control_dim), init_(init) {
    if (std::abs(gamma_) >= 1.0) throw std::invalid_argument("Ar1ControlPrior: |gamma| must be < 1");
    if (sigma_ <= 0.0) throw std::invalid_argument("Ar1ControlPrior: sigma must be > 0");
    if (horizon_ < 1 || control_dim_ < 1)
      throw std::invalid_argument("Ar1ControlPrior: horizon and control_dim must be >= 1");
  }

  int dim() const override { return horizon_ * control_dim_; }
  double gamma() const { return gamma_; }
  double sigma() const { return sigma_; }

  double log_density(const Vector& theta) const override {
    check_dim(theta);
    const double var0 = first_variance();
    double quad = 0.0;
    double log_det = 0.0;
    for (int t = 0; t < horizon_; ++t) {
      const double var = (t == 0) ? var0 : sigma_ * sigma_;
      for (int j = 0; j < control_dim_; ++j) {
        const double eps = innovation(theta, t, j);
        quad += eps * eps / var;
        log_det += std::log(2.0 * M_PI * var);
      }
    }
    return -0.5 * (log_det + quad);
  }

  Vector grad_log_density(const Vector& theta) const override {
    check_dim(theta);
    const double var0 = first_variance();
    Vector grad = Vector::Zero(theta.size());
    for (int t = 0; t < horizon_; ++t) {
      const double var = (t == 0) ? var0 : sigma_ * sigma_;
      for (int j = 0; j < control_dim_; ++j) {
        const double eps = innovation(theta, t, j);
        grad[idx(t, j)] -= eps / var;
        if (t + 1 < horizon_) {
          const double eps_next = innovation(theta, t + 1, j);
          grad[idx(t, j)] += gamma_ * eps_next / (sigma_ * sigma_);
        }
      }
    }
    return grad;
  }

  Vector sample(RngStream& rng) const override {
    Vector theta(dim());
    for (int t = 0; t < horizon_; ++t) {
      for (int j = 0; j < control_dim_; ++j) {
        if (t == 0) {
          theta[idx(0, j)] = std::sqrt(first_variance()) * rng.normal();
        } else {
          theta[idx(t, j)] = gamma_ * theta[idx(t - 1, j)] + sigma_ * rng.normal();
        }
      }
    }
    return theta;
  }

 private:
  int idx(int t, int j) const { return t * control_dim_ + j; }

  double innovation(const Vector& theta, int t, int j) const {
    const double prev = (t == 0) ? 0.0 : theta[idx(t - 1, j)];
    return theta[idx(t, j)] - gamma_ * prev;
  }

  double first_variance() const {
    return init_ == Ar1Init::zero ? sigma_ * sigma_
                                  : sigma_ * sigma_ / (1.0 - gamma_ * gamma_);
  }

  void check_dim(const Vector& theta) const {
    if (theta.size() != dim()) throw std::invalid_argument("Ar1ControlPrior: dimension mismatch");
  }

  double gamma_;
  double sigma_;
  int horizon_;
  int control_dim_;
  Ar1Init init_;
};

}  // namespace tsmc
