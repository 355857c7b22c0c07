#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/test_support.hpp"
#include "tsmc/energy.hpp"
#include "tsmc/prior.hpp"

using namespace tsmc;
using tsmc::test::finite_difference_gradient;
using tsmc::test::relative_error;

TEST_CASE("gaussian prior log-density and gradient agree with closed form", "[priors]") {
  GaussianIidPrior prior(3, 2.0);
  Vector theta(3);
  theta << 1.0, -0.5, 0.25;
  const double expected =
      -0.5 * (3.0 * std::log(2.0 * M_PI * 4.0) + theta.squaredNorm() / 4.0);
  CHECK_THAT(prior.log_density(theta), Catch::Matchers::WithinAbs(expected, 1e-12));

  const Vector fd = finite_difference_gradient(
      [&](const Vector& t) { return prior.log_density(t); }, theta);
  CHECK(relative_error(prior.grad_log_density(theta), fd) < 1e-7);
}

TEST_CASE("gaussian prior sample mean matches within three standard errors", "[priors]") {
  Vector mean(2);
  mean << 1.5, -2.0;
  GaussianIidPrior prior(mean, 0.8);
  RngStream rng(4242);
  const int n = 100000;
  Vector acc = Vector::Zero(2);
  for (int i = 0; i < n; ++i) acc += prior.sample(rng);
  acc /= static_cast<double>(n);
  const double three_se = 3.0 * 0.8 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(acc[0] - 1.5) < three_se);
  CHECK(std::abs(acc[1] + 2.0) < three_se);
}

TEST_CASE("ar1 prior with gamma 0 is the iid Gaussian", "[priors]") {
  const int horizon = 12;
  Ar1ControlPrior ar1(0.0, 0.4, horizon, 2);
  GaussianIidPrior iid(horizon * 2, 0.4);
  RngStream rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    Vector theta(horizon * 2);
    for (int i = 0; i < theta.size(); ++i) theta[i] = rng.normal();
    CHECK_THAT(ar1.log_density(theta),
               Catch::Matchers::WithinAbs(iid.log_density(theta), 1e-10));
    CHECK(relative_error(ar1.grad_log_density(theta), iid.grad_log_density(theta)) < 1e-12);
  }
}

TEST_CASE("ar1 log-density at zero controls is the normalizing constant", "[priors]") {
  const int horizon = 30;
  const double sigma = 0.3;
  Ar1ControlPrior prior(0.9, sigma, horizon, 1);
  const Vector theta = Vector::Zero(horizon);
  const double expected = -0.5 * horizon * std::log(2.0 * M_PI * sigma * sigma);
  CHECK_THAT(prior.log_density(theta), Catch::Matchers::WithinAbs(expected, 1e-12));
}

TEST_CASE("ar1 gradient matches finite differences", "[priors]") {
  Ar1ControlPrior prior(0.9, 0.3, 30, 1);
  RngStream rng(77);
  Vector theta(30);
  for (int i = 0; i < 30; ++i) theta[i] = 0.5 * rng.normal();
  const Vector fd = finite_difference_gradient(
      [&](const Vector& t) { return prior.log_density(t); }, theta);
  CHECK(relative_error(prior.grad_log_density(theta), fd) < 1e-6);
}

TEST_CASE("ar1 gradient matches finite differences for vector controls", "[priors]") {
  Ar1ControlPrior prior(-0.4, 0.7, 8, 3, Ar1Init::stationary);
  RngStream rng(78);
  Vector theta(24);
  for (int i = 0; i < 24; ++i) theta[i] = rng.normal();
  const Vector fd = finite_difference_gradient(
      [&](const Vector& t) { return prior.log_density(t); }, theta);
  CHECK(relative_error(prior.grad_log_density(theta), fd) < 1e-6);
}

TEST_CASE("ar1 samples show the configured lag-1 autocorrelation", "[priors]") {
  const double gamma = 0.9;
  const int horizon = 4000;
  Ar1ControlPrior prior(gamma, 0.3, horizon, 1, Ar1Init::stationary);
  RngStream rng(123);
  const Vector u = prior.sample(rng);
  double num = 0.0;
  double den = 0.0;
  for (int t = 1; t < horizon; ++t) {
    num += u[t] * u[t - 1];
    den += u[t - 1] * u[t - 1];
  }
  CHECK(std::abs(num / den - gamma) < 0.05);
}

TEST_CASE("ar1 rejects dimension mismatches", "[priors]") {
  Ar1ControlPrior prior(0.9, 0.3, 10, 1);
  CHECK_THROWS_AS(prior.log_density(Vector::Zero(9)), std::invalid_argument);
  CHECK_THROWS_AS(prior.grad_log_density(Vector::Zero(11)), std::invalid_argument);
}

TEST_CASE("tempered potential at beta 0 is the negative prior log-density", "[priors]") {
  GaussianIidPrior prior(2, 1.0);
  QuadraticEnergy energy(Vector::Constant(2, 3.0));
  const auto pot = tempered_potential({&prior, &energy, 0.0, 0.5});
  Vector theta(2);
  theta << 0.7, -0.1;
  CHECK_THAT(pot.value(theta), Catch::Matchers::WithinAbs(-prior.log_density(theta), 1e-13));
}

TEST_CASE("tempered potential is affine in beta", "[priors]") {
  GaussianIidPrior prior(2, 1.3);
  QuadraticEnergy energy(Vector::Constant(2, 2.0));
  Vector theta(2);
  theta << 0.3, 0.9;
  const double lambda = 0.4;
  auto value_at = [&](double beta) {
    return tempered_potential({&prior, &energy, beta, lambda}).value(theta);
  };
  // V(b1) + V(b2) = V(b1 + b2) + V(0) whenever all tilts are linear in beta.
  CHECK_THAT(value_at(0.25) + value_at(0.5),
             Catch::Matchers::WithinAbs(value_at(0.75) + value_at(0.0), 1e-12));
}

TEST_CASE("tempered potential gradient passes finite differences", "[priors]") {
  GaussianIidPrior prior(4, 0.9);
  QuadraticEnergy energy((Vector(4) << 2.0, 0.5, 1.0, 3.0).finished());
  const auto pot = tempered_potential({&prior, &energy, 0.6, 0.25});
  RngStream rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    Vector theta(4);
    for (int i = 0; i < 4; ++i) theta[i] = rng.normal();
    const Vector fd = finite_difference_gradient(pot.value, theta);
    CHECK(relative_error(pot.gradient(theta), fd) < 1e-5);
  }
}

TEST_CASE("potential evaluators report divergence as infinite energy", "[priors]") {
  struct DivergingEnergy final : EnergyModel {
    int dim() const override { return 1; }
    double value(const Vector&) const override { throw RolloutDivergence(3); }
    Vector gradient(const Vector&) const override { throw RolloutDivergence(3); }
  };
  GaussianIidPrior prior(1, 1.0);
  DivergingEnergy energy;
  const auto pot = tempered_potential({&prior, &energy, 0.5, 1.0});
  CHECK(pot.value(Vector::Zero(1)) == kInf);
  CHECK_FALSE(pot.gradient(Vector::Zero(1)).allFinite());
}
