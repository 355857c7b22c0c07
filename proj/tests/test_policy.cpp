#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "support/test_support.hpp"
#include "tsmc/policy/mlp.hpp"
#include "tsmc/rng.hpp"

using namespace tsmc;
using tsmc::test::finite_difference_jacobian;
using tsmc::test::relative_error;

namespace {

MlpSpec small_spec(bool with_bias = true) {
  MlpSpec spec;
  spec.layer_sizes = {3, 8, 8, 2};
  spec.with_bias = with_bias;
  spec.u_max = 2.0;
  return spec;
}

Vector random_theta(const MlpPolicy& policy, RngStream& rng, double scale = 0.5) {
  Vector theta(policy.param_dim());
  for (int i = 0; i < theta.size(); ++i) theta[i] = scale * rng.normal();
  return theta;
}

}  // namespace

TEST_CASE("mlp parameter counts follow the layout", "[policy]") {
  MlpPolicy with_bias(small_spec(true));
  CHECK(with_bias.param_dim() == (8 * 3 + 8) + (8 * 8 + 8) + (2 * 8 + 2));
  MlpPolicy without_bias(small_spec(false));
  CHECK(without_bias.param_dim() == 8 * 3 + 8 * 8 + 2 * 8);

  // The bias-free two-hidden-32 architectures give the reference widths for
  // 4- and 6-dimensional inputs.
  MlpSpec wide;
  wide.layer_sizes = {4, 32, 32, 1};
  wide.with_bias = false;
  CHECK(MlpPolicy(wide).param_dim() == 1184);
  wide.layer_sizes = {6, 32, 32, 1};
  CHECK(MlpPolicy(wide).param_dim() == 1248);
}

TEST_CASE("zero parameters produce zero controls for any input", "[policy]") {
  MlpPolicy policy(small_spec());
  RngStream rng(1);
  const Vector theta = Vector::Zero(policy.param_dim());
  for (int trial = 0; trial < 10; ++trial) {
    Vector x(3);
    for (int i = 0; i < 3; ++i) x[i] = 5.0 * rng.normal();
    CHECK(policy.forward(theta, x).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("zero input with zero biases maps to zero control", "[policy]") {
  MlpPolicy policy(small_spec(false));
  RngStream rng(2);
  const Vector theta = random_theta(policy, rng);
  CHECK(policy.forward(theta, Vector::Zero(3)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("forward pass is invariant under a serialize round-trip", "[policy]") {
  MlpPolicy policy(small_spec());
  RngStream rng(3);
  const Vector theta = random_theta(policy, rng);
  Vector x(3);
  x << 0.2, -1.0, 0.7;
  const Vector u = policy.forward(theta, x);

  // Round-trip the flat vector through a raw buffer.
  std::vector<double> buffer(theta.data(), theta.data() + theta.size());
  Vector restored = Eigen::Map<const Vector>(buffer.data(), static_cast<Eigen::Index>(buffer.size()));
  const Vector u2 = policy.forward(restored, x);
  CHECK((u - u2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mlp jacobians match finite differences", "[policy]") {
  MlpPolicy policy(small_spec());
  RngStream rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector theta = random_theta(policy, rng);
    Vector x(3);
    for (int i = 0; i < 3; ++i) x[i] = rng.normal();

    Matrix dudx, dudtheta;
    policy.jacobians(theta, x, dudx, dudtheta);

    const Matrix fd_x = finite_difference_jacobian(
        [&](const Vector& xp) { return policy.forward(theta, xp); }, x);
    const Matrix fd_theta = finite_difference_jacobian(
        [&](const Vector& tp) { return policy.forward(tp, x); }, theta);
    CHECK(relative_error(dudx, fd_x) < 1e-5);
    CHECK(relative_error(dudtheta, fd_theta) < 1e-5);
  }
}

TEST_CASE("state jacobian is zero when all weights are zero", "[policy]") {
  MlpPolicy policy(small_spec());
  Matrix dudx, dudtheta;
  policy.jacobians(Vector::Zero(policy.param_dim()), Vector::Ones(3), dudx, dudtheta);
  CHECK(dudx.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single linear layer reduces to its weight matrix", "[policy]") {
  MlpSpec spec;
  spec.layer_sizes = {3, 2};
  spec.with_bias = false;
  spec.hidden_activation = MlpActivation::identity;
  spec.output_squash = Squash::none;
  MlpPolicy policy(spec);

  Vector theta(6);
  theta << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;  // row-major W (2 x 3)
  Vector x(3);
  x << 0.5, -1.0, 2.0;

  const Vector u = policy.forward(theta, x);
  CHECK_THAT(u[0], Catch::Matchers::WithinAbs(1.0 * 0.5 - 2.0 + 3.0 * 2.0, 1e-14));
  CHECK_THAT(u[1], Catch::Matchers::WithinAbs(4.0 * 0.5 - 5.0 + 6.0 * 2.0, 1e-14));

  Matrix dudx, dudtheta;
  policy.jacobians(theta, x, dudx, dudtheta);
  Matrix expected(2, 3);
  expected << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
  CHECK(relative_error(dudx, expected) < 1e-14);
}

TEST_CASE("jacobian-vector products match directional differences", "[policy]") {
  MlpPolicy policy(small_spec());
  RngStream rng(6);
  const Vector theta = random_theta(policy, rng);
  Vector x(3);
  x << 0.1, 0.4, -0.6;

  Matrix dudx, dudtheta;
  policy.jacobians(theta, x, dudx, dudtheta);

  for (int trial = 0; trial < 5; ++trial) {
    Vector direction(policy.param_dim());
    for (int i = 0; i < direction.size(); ++i) direction[i] = rng.normal();
    direction.normalize();
    const double h = 1e-5;
    const Vector plus = policy.forward(theta + h * direction, x);
    const Vector minus = policy.forward(theta - h * direction, x);
    const Vector jvp = dudtheta * direction;
    CHECK(relative_error(jvp, ((plus - minus) / (2.0 * h)).eval()) < 1e-4);
  }
}

TEST_CASE("saturated outputs flatten both jacobians", "[policy]") {
  MlpPolicy policy(small_spec());
  RngStream rng(7);
  const Vector theta_small = random_theta(policy, rng, 0.5);
  const Vector theta_large = 50.0 * theta_small;  // drive the tanh tails
  Vector x(3);
  x << 1.0, 1.0, 1.0;

  Matrix dudx_small, dudtheta_small, dudx_large, dudtheta_large;
  policy.jacobians(theta_small, x, dudx_small, dudtheta_small);
  policy.jacobians(theta_large, x, dudx_large, dudtheta_large);
  CHECK(dudx_large.cwiseAbs().maxCoeff() < 1e-3 * std::max(1.0, dudx_small.cwiseAbs().maxCoeff()));
  CHECK(dudtheta_large.cwiseAbs().maxCoeff() <
        1e-3 * std::max(1.0, dudtheta_small.cwiseAbs().maxCoeff()));
}

TEST_CASE("mlp rejects mismatched parameter lengths", "[policy]") {
  MlpPolicy policy(small_spec());
  CHECK_THROWS_AS(policy.forward(Vector::Zero(policy.param_dim() - 1), Vector::Zero(3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(policy.forward(Vector::Zero(policy.param_dim()), Vector::Zero(4)),
                  std::invalid_argument);
}

TEST_CASE("mlp controller chains the encoder jacobian", "[policy]") {
  auto split = std::make_shared<envs::PendulumTipSplit>(1.0);
  auto encoder = std::make_shared<SplitEncoder>(split);
  MlpSpec spec;
  spec.layer_sizes = {4, 8, 8, 1};
  spec.u_max = 3.0;
  MlpController controller(MlpPolicy(spec), encoder);

  RngStream rng(8);
  Vector theta(controller.param_dim());
  for (int i = 0; i < theta.size(); ++i) theta[i] = 0.4 * rng.normal();
  Vector x(2);
  x << 0.8, -0.3;

  const Matrix fd = finite_difference_jacobian(
      [&](const Vector& xp) { return controller.act(theta, 0, xp); }, x);
  CHECK(relative_error(controller.jac_state(theta, 0, x), fd) < 1e-5);
}
