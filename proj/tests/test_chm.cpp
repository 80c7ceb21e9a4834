#include "metriplex/chm.hpp"
#include "metriplex/chm_thermal.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace metriplex;
using namespace metriplex::chm;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const std::vector<Complex>& v) {
  double m = 0.0;
  for (const Complex& z : v) m = std::max(m, std::abs(z));
  return m;
}

double state_distance(const SpectralState& a, const SpectralState& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.coeffs().size(); ++i)
    m = std::max(m, std::abs(a.coeffs()[i] - b.coeffs()[i]));
  return m;
}

}  // namespace

TEST_SUITE("chm_spectral") {

TEST_CASE("operator coefficients") {
  const Coefficients k = coefficients({1, 0}, {0, 1}, 0.7);
  CHECK(k.C == doctest::Approx(3.0 / (16.0 * kPi * kPi)).epsilon(1e-15));
  const ModeBox box(2);
  for (int i = 0; i < box.size(); ++i)
    for (int j = 0; j < box.size(); ++j) {
      const Coefficients a = coefficients(box.mode(i), box.mode(j), 0.0);
      const Coefficients b = coefficients(box.mode(j), box.mode(i), 0.4);
      const Coefficients a4 = coefficients(box.mode(i), box.mode(j), 0.4);
      CHECK(a.B == Complex(0.0, 0.0));
      CHECK(a.C == -b.C);
      CHECK(a4.B == -b.B);
    }
  for (int i = 0; i < box.size(); ++i) CHECK(coefficients(box.mode(i), {0, 0}, 0.3).C == 0.0);
}

TEST_CASE("hamiltonian and casimir values") {
  SpectralState s(2, 0.0);
  CHECK(hamiltonian(s) == 0.0);
  CHECK(casimir(s).value == 0.0);
  s.at(1, 0) = 0.5;
  s.at(-1, 0) = 0.5;
  CHECK(hamiltonian(s) == doctest::Approx(2.0 * kPi * kPi).epsilon(1e-15));
  CHECK(casimir(s).value == doctest::Approx(4.0 * kPi * kPi).epsilon(1e-15));
  CHECK_FALSE(casimir(s).warning.has_value());
  SpectralState sc(2, 0.5);
  CHECK(casimir(sc).warning.has_value());

  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const auto r = random_state(3, 0.0, rng, 1.0);
    CHECK(casimir(r).value - hamiltonian(r) >= 0.0);
  }
}

TEST_CASE("real-chart gradients match finite differences") {
  const auto sys = real_chart_system(2, 0.0);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    const Vector x = random_state(2, 0.0, rng, 1.0).to_real();
    const Vector a = sys.hamiltonian.gradient(x), b = sys.hamiltonian.fd_gradient(x);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-8 * a.cwiseAbs().maxCoeff());
    const Vector c = sys.casimirs[0].gradient(x), d = sys.casimirs[0].fd_gradient(x);
    CHECK((c - d).cwiseAbs().maxCoeff() <= 1e-8 * c.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("casimir residual and conservation identities") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 100; ++k) {
    const auto s = random_state(3, 0.0, rng, 1.0);
    CHECK(max_abs(casimir_residual(s)) <= 1e-12);
  }
}

TEST_CASE("right-hand side") {
  SpectralState zero(2, 0.3);
  CHECK(max_abs(rhs_deterministic(zero)) == 0.0);

  SpectralState pair(2, 0.0);
  pair.at(1, 1) = Complex(0.3, -0.2);
  pair.at(-1, -1) = std::conj(pair.at(1, 1));
  CHECK(max_abs(rhs_deterministic(pair)) == 0.0);

  std::mt19937_64 rng(9);
  for (double c : {0.0, 0.6}) {
    for (int k = 0; k < 10; ++k) {
      const auto s = random_state(2, c, rng, 1.0);
      const auto a = rhs_deterministic(s);
      const auto b = rhs_operator(s);
      double d = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
      CHECK(d <= 1e-12 * std::max(1.0, max_abs(a)));
      CHECK(std::abs(liouville_trace(s)) <= 1e-8);
    }
  }
}

TEST_CASE("interior triads satisfy jacobi") {
  std::mt19937_64 rng(11);
  const CHMOperator op(3, 0.0);
  for (int k = 0; k < 10; ++k) {
    const auto s = random_state(3, 0.0, rng, 1.0);
    const auto rep = op.jacobi(s.coeffs());
    CHECK(rep.interior <= 1e-10);
    CHECK(rep.interior_triads > 0);
    CHECK(rep.boundary_triads > 0);
  }
}

TEST_CASE("deterministic integration") {
  std::mt19937_64 rng(13);
  const auto s0 = random_state(3, 0.0, rng, 1.0);
  const auto run = integrate_deterministic(s0, 1e-3, 1000, 100);
  const auto& first = run.series.front();
  const auto& last = run.series.back();
  CHECK(last.t == doctest::Approx(1.0));
  CHECK(std::abs(last.H - first.H) / first.H <= 1e-6);
  CHECK(std::abs(last.C - first.C) / first.C <= 1e-6);
  for (const auto& r : run.series) CHECK(r.reality <= 1e-13);

  // Fourth order: halving dt shrinks the error against a fine reference ~16x.
  const auto ref = integrate_deterministic(s0, 0.0025, 400).state;
  const double e1 = state_distance(integrate_deterministic(s0, 0.04, 25).state, ref);
  const double e2 = state_distance(integrate_deterministic(s0, 0.02, 50).state, ref);
  const double order = std::log2(e1 / e2);
  CHECK(order >= 3.5);
  CHECK(order <= 4.5);
}

TEST_CASE("partition function") {
  // Monte Carlo with a widened Gaussian proposal over the real chart.
  const int K = 1;
  const double beta = 1.0, mu = 1.0;
  const auto sys = real_chart_system(K, 0.0);
  const ModeBox box(K);
  const int n = box.real_dimension();
  Vector sd(n);
  auto a_of = [&](ModeIndex k) {
    const double w = 1.0 + k.n * k.n + k.m * k.m;
    return 2.0 * kPi * kPi * w * (beta + mu * w);
  };
  sd[0] = 1.3 / std::sqrt(2.0 * a_of({0, 0}));
  for (std::size_t r = 0; r < box.representatives().size(); ++r)
    sd[1 + 2 * r] = sd[2 + 2 * r] = 1.3 / std::sqrt(4.0 * a_of(box.mode(box.representatives()[r])));
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  const long N = 400000;
  double sum = 0.0;
  Vector x(n);
  for (long p = 0; p < N; ++p) {
    double logq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double z = nd(rng);
      x[i] = sd[i] * z;
      logq += -0.5 * z * z - std::log(sd[i] * std::sqrt(2.0 * kPi));
    }
    sum += std::exp(-beta * sys.hamiltonian(x) - mu * sys.casimirs[0](x) - logq);
  }
  const double mc = sum / N;
  const auto pf = partition_function(K, beta, mu);
  CHECK(pf.Z == doctest::Approx(mc).epsilon(0.01));
  CHECK(std::log(pf.Z) == doctest::Approx(pf.log_Z).epsilon(1e-12));

  double prev = partition_function(2, 0.5, 0.1).Z;
  for (double b : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    const double z = partition_function(2, b, 0.1).Z;
    CHECK(z < prev);
    prev = z;
  }
  CHECK_THROWS_AS(partition_function(2, 0.0, 0.0), NumericalError);
  CHECK_THROWS_AS(partition_function(2, -1.0, 1.0), ConfigError);
}

TEST_CASE("equilibrium samples carry the predicted spectrum") {
  const Matrix X = sample_equilibrium(1, 1.0, 1.0, 200000, 3);
  const ModeBox box(1);
  const auto& reps = box.representatives();
  for (std::size_t r = 0; r < reps.size(); ++r) {
    double s = 0.0;
    for (long p = 0; p < X.cols(); ++p)
      s += X(1 + 2 * r, p) * X(1 + 2 * r, p) + X(2 + 2 * r, p) * X(2 + 2 * r, p);
    const double predicted = 1.0 / (2.0 * alpha(box.mode(reps[r]), 1.0, 1.0));
    CHECK(s / X.cols() == doctest::Approx(predicted).epsilon(0.01));
  }
}

TEST_CASE("thermalization without noise freezes H and C") {
  ThermalizeConfig cfg;
  cfg.K = 1;
  cfg.D = 0.0;
  cfg.particles = 50;
  cfg.steps = 100;
  cfg.quench_steps = 20;
  cfg.dt = 1e-3;
  const auto res = thermalize(cfg);
  CHECK(res.H_final == doctest::Approx(res.H_after_quench).epsilon(1e-9));
  CHECK(res.spectrum.size() == 9);

  cfg.c = 0.5;
  CHECK_THROWS_AS(thermalize(cfg), ConfigError);
  cfg.c = 0.0;
  cfg.beta = 0.0;
  cfg.mu = 0.0;
  CHECK_THROWS_AS(thermalize(cfg), NumericalError);
}

}  // TEST_SUITE
