#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tsmc/smc.hpp"

using namespace tsmc;

namespace {

Vector log_weights_from(std::initializer_list<double> weights) {
  Vector lw(static_cast<Eigen::Index>(weights.size()));
  Eigen::Index i = 0;
  for (double w : weights) lw[i++] = w > 0.0 ? std::log(w) : -kInf;
  return lw;
}

ParticlePopulation uniform_population(int n, int d = 1) {
  ParticlePopulation pop;
  pop.thetas = Matrix::Zero(n, d);
  pop.log_weights = Vector::Constant(n, -std::log(static_cast<double>(n)));
  pop.beta = 0.0;
  return pop;
}

}  // namespace

TEST_CASE("ess hits its bounds at uniform and one-hot weights", "[particle]") {
  const int n = 8;
  Vector uniform = Vector::Constant(n, -std::log(static_cast<double>(n)));
  CHECK_THAT(ess(uniform), Catch::Matchers::WithinAbs(8.0, 1e-12));

  Vector one_hot = Vector::Constant(n, -kInf);
  one_hot[3] = 0.0;
  CHECK_THAT(ess(one_hot), Catch::Matchers::WithinAbs(1.0, 1e-12));

  CHECK_THAT(ess(log_weights_from({0.5, 0.5, 0.0, 0.0})),
             Catch::Matchers::WithinAbs(2.0, 1e-12));
}

TEST_CASE("ess is invariant to the normalization constant", "[particle]") {
  Vector lw = log_weights_from({0.1, 0.2, 0.3, 0.4});
  const double reference = ess(lw);
  CHECK_THAT(ess(lw.array() + 7.5), Catch::Matchers::WithinAbs(reference, 1e-10));
}

TEST_CASE("ess rejects non-finite weights", "[particle]") {
  Vector lw = log_weights_from({0.5, 0.5});
  lw[0] = kNaN;
  CHECK_THROWS_AS(ess(lw), WeightError);
  lw[0] = kInf;
  CHECK_THROWS_AS(ess(lw), WeightError);
}

TEST_CASE("ess stays within [1, N] on random weight vectors", "[particle]") {
  RngStream rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + rng.uniform_int(0, 30);
    Vector lw(n);
    for (int i = 0; i < n; ++i) lw[i] = 3.0 * rng.normal();
    const double value = ess(lw);
    CHECK(value >= 1.0 - 1e-12);
    CHECK(value <= static_cast<double>(n) + 1e-9);
  }
}

TEST_CASE("reweight with unchanged beta keeps weights", "[particle]") {
  ParticlePopulation pop = uniform_population(4);
  pop.beta = 0.3;
  Vector energies(4);
  energies << 1.0, 2.0, 3.0, 4.0;
  const Vector before = pop.log_weights;
  const double inc = reweight(pop, energies, 0.3, 0.5);
  CHECK_THAT(inc, Catch::Matchers::WithinAbs(0.0, 1e-14));
  CHECK((pop.log_weights - before).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("reweight is invariant to constant energy shifts", "[particle]") {
  ParticlePopulation a = uniform_population(5);
  ParticlePopulation b = uniform_population(5);
  Vector energies(5);
  energies << 0.3, -1.2, 4.0, 2.2, 0.9;
  reweight(a, energies, 0.6, 0.25);
  reweight(b, energies.array() + 17.0, 0.6, 0.25);
  CHECK((a.log_weights - b.log_weights).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("reweight reproduces the hand-computed two-particle case", "[particle]") {
  // Uniform start, energies (0, lambda ln 2 / dbeta): the incremental weights
  // are (1, 1/2), so the normalized weights come out (2/3, 1/3).
  const double lambda = 0.7;
  const double dbeta = 0.4;
  ParticlePopulation pop = uniform_population(2);
  Vector energies(2);
  energies << 0.0, lambda * std::log(2.0) / dbeta;
  reweight(pop, energies, dbeta, lambda);
  CHECK_THAT(std::exp(pop.log_weights[0]), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
  CHECK_THAT(std::exp(pop.log_weights[1]), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
}

TEST_CASE("reweight accumulates the level's log mean incremental weight", "[particle]") {
  ParticlePopulation pop = uniform_population(3);
  Vector energies(3);
  energies << 1.0, 2.0, 3.0;
  const double lambda = 0.5;
  const double beta_new = 0.2;
  const double inc = reweight(pop, energies, beta_new, lambda);
  double expected = 0.0;
  for (int i = 0; i < 3; ++i) expected += std::exp(-beta_new / lambda * energies[i]) / 3.0;
  CHECK_THAT(inc, Catch::Matchers::WithinAbs(std::log(expected), 1e-12));
}

TEST_CASE("reweight rejects schedule violations", "[particle]") {
  ParticlePopulation pop = uniform_population(3);
  pop.beta = 0.5;
  Vector energies = Vector::Zero(3);
  CHECK_THROWS_AS(reweight(pop, energies, 0.4, 1.0), std::invalid_argument);
}

TEST_CASE("diverged particles lose all weight", "[particle]") {
  ParticlePopulation pop = uniform_population(3);
  Vector energies(3);
  energies << 1.0, kInf, 2.0;
  reweight(pop, energies, 0.5, 1.0);
  CHECK(std::exp(pop.log_weights[1]) == 0.0);
  const double total = std::exp(pop.log_weights[0]) + std::exp(pop.log_weights[2]);
  CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("find_next_beta jumps to 1 when energies are flat", "[particle]") {
  ParticlePopulation pop = uniform_population(16);
  Vector energies = Vector::Constant(16, 3.25);
  TsmcConfig config;
  config.n_particles = 16;
  config.ess_ratio = 0.9;
  config.temperature = 0.05;
  const NextBeta next = find_next_beta(pop, energies, config);
  CHECK(next.beta == 1.0);
  CHECK_FALSE(next.stalled);
}

TEST_CASE("find_next_beta meets the ESS target within bisection slack", "[particle]") {
  RngStream rng(7);
  const int n = 64;
  ParticlePopulation pop = uniform_population(n);
  Vector energies(n);
  for (int i = 0; i < n; ++i) energies[i] = 10.0 + 4.0 * rng.normal();

  TsmcConfig config;
  config.n_particles = n;
  config.ess_ratio = 0.8;
  config.temperature = 0.1;
  const NextBeta next = find_next_beta(pop, energies, config);
  REQUIRE_FALSE(next.stalled);
  REQUIRE(next.beta > 0.0);
  REQUIRE(next.beta < 1.0);

  ParticlePopulation after = pop;
  reweight(after, energies, next.beta, config.temperature);
  CHECK(ess(after.log_weights) >= config.ess_ratio * n - 1.0);
}

TEST_CASE("find_next_beta returns 1 when the endpoint satisfies the target", "[particle]") {
  const int n = 32;
  ParticlePopulation pop = uniform_population(n);
  pop.beta = 0.95;
  Vector energies(n);
  for (int i = 0; i < n; ++i) energies[i] = 0.01 * i;
  TsmcConfig config;
  config.n_particles = n;
  config.ess_ratio = 0.8;
  config.temperature = 1.0;
  const NextBeta next = find_next_beta(pop, energies, config);
  CHECK(next.beta == 1.0);
  CHECK_FALSE(next.stalled);
}

TEST_CASE("find_next_beta flags a stalled schedule instead of looping", "[particle]") {
  // One particle carries almost all weight already; no beta' > beta can keep
  // the ESS above target, so the schedule must be forced forward and flagged.
  const int n = 4;
  ParticlePopulation pop = uniform_population(n);
  pop.beta = 0.5;
  pop.log_weights = log_weights_from({0.97, 0.01, 0.01, 0.01});
  Vector energies(n);
  energies << 0.0, 5.0, 6.0, 7.0;
  TsmcConfig config;
  config.n_particles = n;
  config.ess_ratio = 0.9;
  config.temperature = 1.0;
  const NextBeta next = find_next_beta(pop, energies, config);
  CHECK(next.stalled);
  CHECK_THAT(next.beta, Catch::Matchers::WithinAbs(0.5 + 1e-6, 1e-9));
}

TEST_CASE("resampling one-hot weights clones the surviving particle", "[particle]") {
  ParticlePopulation pop;
  pop.thetas = Matrix::Zero(4, 2);
  for (int i = 0; i < 4; ++i) pop.thetas.row(i) = Vector::Constant(2, static_cast<double>(i));
  pop.log_weights = Vector::Constant(4, -kInf);
  pop.log_weights[2] = 0.0;

  for (auto scheme : {ResamplingScheme::systematic, ResamplingScheme::multinomial}) {
    ParticlePopulation copy = pop;
    RngStream rng(99);
    resample(copy, scheme, rng);
    for (int i = 0; i < 4; ++i) {
      CHECK(copy.thetas(i, 0) == 2.0);
      CHECK_THAT(std::exp(copy.log_weights[i]), Catch::Matchers::WithinAbs(0.25, 1e-14));
    }
  }
}

TEST_CASE("systematic resampling of uniform weights is a permutation-free copy", "[particle]") {
  const int n = 10;
  ParticlePopulation pop;
  pop.thetas = Matrix::Zero(n, 1);
  for (int i = 0; i < n; ++i) pop.thetas(i, 0) = static_cast<double>(i);
  pop.log_weights = Vector::Constant(n, -std::log(static_cast<double>(n)));
  RngStream rng(5);
  const auto ancestors = resample(pop, ResamplingScheme::systematic, rng);
  for (int i = 0; i < n; ++i) CHECK(ancestors[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("resampling is unbiased for both schemes", "[particle]") {
  // w = (0.7, 0.3): mean offspring count of particle 0 over many resamplings
  // must match N w within 3 standard errors of the multinomial case.
  const Vector lw = log_weights_from({0.7, 0.3});
  const int trials = 100000;
  for (auto scheme : {ResamplingScheme::multinomial, ResamplingScheme::systematic}) {
    RngStream rng(2024);
    double offspring_total = 0.0;
    for (int t = 0; t < trials; ++t) {
      const auto ancestors = resample_indices(lw, scheme, rng);
      for (int a : ancestors) offspring_total += (a == 0) ? 1.0 : 0.0;
    }
    const double mean = offspring_total / trials;
    const double expected = 2.0 * 0.7;
    // Binomial(2, 0.7) has variance 0.42; systematic variance is smaller.
    const double three_se = 3.0 * std::sqrt(0.42 / trials);
    INFO("scheme " << (scheme == ResamplingScheme::multinomial ? "multinomial" : "systematic"));
    CHECK(std::abs(mean - expected) <= three_se);
  }
}
