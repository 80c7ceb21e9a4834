#include "metriplex/parallel.hpp"
#include "metriplex/stochastic.hpp"
#include "metriplex/systems.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace metriplex;

namespace {

Matrix gaussian_samples(int n, long N, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, sd);
  Matrix X(n, N);
  for (long p = 0; p < N; ++p)
    for (int i = 0; i < n; ++i) X(i, p) = nd(rng);
  return X;
}

PhaseGrid square(int n, double w, int cells) {
  return PhaseGrid(std::vector<Axis>(n, Axis{-w, w, cells}), 1);
}

}  // namespace

TEST_SUITE("stochastic_dynamics") {

TEST_CASE("drift with friction") {
  const auto sys = canonical_2d();
  Vector x(2);
  x << 1, 0;
  const Vector d = sde::drift(sys, x, 0.1);
  CHECK(d[0] == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(d[1] == doctest::Approx(1.0).epsilon(1e-15));

  const auto rb = rigid_body();
  Vector y(3);
  y << 0.4, -1, 2;
  CHECK((sde::drift(rb, y, 0.0) - hamiltonian_vector_field(rb, y)).norm() == 0.0);
  CHECK(sde::drift(sys, Vector::Zero(2), 0.3).norm() == 0.0);
}

TEST_CASE("fluctuation-dissipation coupling") {
  const auto f = sde::FrictionModel::fixed(2.0, 0.3);
  CHECK(f.gamma == doctest::Approx(0.3));
  CHECK(f.fluctuation_dissipation_holds(0.3));
  CHECK_FALSE(f.fluctuation_dissipation_holds(0.4));
}

TEST_CASE("same seed gives identical ensembles, serial or threaded") {
  const auto rb = rigid_body();
  const Matrix X0 = gaussian_samples(3, 300, 1.0, 9);
  auto run = [&](int threads) {
    set_thread_count(threads);
    sde::Ensemble ens(X0, {0.5, 42}, sde::FrictionModel::fixed(1.0, 0.5));
    for (int s = 0; s < 50; ++s) sde::step_stratonovich(ens, rb, 0.01);
    set_thread_count(1);
    return ens.particles();
  };
  const Matrix a = run(1), b = run(1), c = run(3);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - c).cwiseAbs().maxCoeff() == 0.0);
  sde::Ensemble other(X0, {0.5, 43}, sde::FrictionModel::fixed(1.0, 0.5));
  sde::step_stratonovich(other, rb, 0.01);
  CHECK((other.particles() - X0).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("noise along a degenerate operator keeps particles on their leaf") {
  const auto rb = rigid_body();
  const Matrix X0 = gaussian_samples(3, 200, 1.0, 5);
  sde::Ensemble ens(X0, {0.4, 1}, sde::FrictionModel::fixed(1.0, 0.4));
  for (int s = 0; s < 1000; ++s) sde::step_stratonovich(ens, rb, 1e-3);
  double worst = 0.0;
  for (long p = 0; p < ens.size(); ++p) {
    const double c0 = rb.casimirs[0](X0.col(p));
    const double c1 = rb.casimirs[0](ens.particles().col(p));
    worst = std::max(worst, std::abs(c1 - c0) / c0);
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("blow-up is reported with the last good time") {
  const auto sys = canonical_2d();
  Matrix X(2, 1);
  X << 1, 0;
  sde::FrictionModel anti{sde::BetaMode::fixed, -100.0, -50.0, 10};
  sde::Ensemble ens(X, {0.0, 1}, anti);
  try {
    for (int s = 0; s < 10000; ++s) sde::step_stratonovich(ens, sys, 0.01);
    FAIL("no blow-up");
  } catch (const sde::BlowUpError& e) {
    CHECK(e.last_good_time() > 0.0);
    CHECK(e.last_good_time() < 1.0);
  }
}

TEST_CASE("beta estimate from exact Gaussian samples") {
  const auto sys = canonical_2d();
  const double beta = 2.0;
  const Matrix X = gaussian_samples(2, 100000, 1.0 / std::sqrt(beta), 11);
  const double b = sde::estimate_beta_samples(X, sys, square(2, 3.0, 64));
  CHECK(b == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("beta estimate ignores the Casimir multiplier") {
  // f ~ exp(-beta H - mu C): each axis Gaussian with 1/var = beta/I_i + mu.
  const auto rb = rigid_body();
  const double beta = 1.5, mu = 0.7;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd;
  const double I[3] = {1, 2, 3};
  // Histogram bias is O(h^2) plus finite counts; 1e6 samples keep it near 2%.
  Matrix X(3, 1000000);
  for (long p = 0; p < X.cols(); ++p)
    for (int i = 0; i < 3; ++i) X(i, p) = nd(rng) / std::sqrt(beta / I[i] + mu);
  const double b = sde::estimate_beta_samples(X, rb, square(3, 2.5, 20));
  CHECK(b == doctest::Approx(beta).epsilon(0.05));
}

TEST_CASE("beta estimate needs samples") {
  const auto sys = canonical_2d();
  Matrix one(2, 1);
  one << 0.1, 0.2;
  CHECK_THROWS_AS(sde::estimate_beta_samples(one, sys, square(2, 3, 8)),
                  sde::InsufficientSamples);
}

TEST_CASE("histogram entropy") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix U(2, 100000);
  for (long p = 0; p < U.cols(); ++p) U.col(p) << u(rng), u(rng);
  const PhaseGrid unit({Axis{0, 1, 20}, Axis{0, 1, 20}}, 1);
  const auto eu = sde::entropy_estimate_samples(U, unit);
  CHECK(std::abs(eu.value) < 0.01);
  CHECK(eu.outside_fraction == 0.0);

  const Matrix G = gaussian_samples(2, 100000, 1.0, 8);
  const auto eg = sde::entropy_estimate_samples(G, square(2, 5.0, 50));
  const double exact = std::log(2.0 * std::numbers::pi * std::numbers::e);
  CHECK(eg.value == doctest::Approx(exact).epsilon(0.02));
  CHECK(eg.miller_madow_bias > 0.0);

  CHECK_THROWS(sde::entropy_estimate_samples(Matrix(2, 0), unit));
}

TEST_CASE("ensemble diagnostics") {
  const auto sys = canonical_2d();
  const Matrix X = gaussian_samples(2, 1000, 1.0, 2);
  sde::Ensemble ens(X, {0.2, 1}, sde::FrictionModel::fixed(1.0, 0.2));
  const auto d = sde::diagnose(ens, sys, square(2, 5, 20));
  double e = 0.0;
  for (long p = 0; p < X.cols(); ++p) e += 0.5 * X.col(p).squaredNorm();
  CHECK(d.E_mean == doctest::Approx(e / 1000).epsilon(1e-14));
  CHECK(d.entropy_estimator == "histogram-plugin");
  CHECK(std::isfinite(d.entropy_estimate));

  sde::Ensemble ad(X, {0.2, 1}, sde::FrictionModel::adaptive(1.0, 0.2));
  CHECK_THROWS(sde::evolve(ad, sys, 0.01, 5));
}

}  // TEST_SUITE
