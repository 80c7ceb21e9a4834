#include "metriplex/brackets.hpp"
#include "metriplex/systems.hpp"
#include "metriplex/verify.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace metriplex;
namespace br = metriplex::brackets;

namespace {

PhaseGrid square(int n, double w, int cells) {
  return PhaseGrid(std::vector<Axis>(n, Axis{-w, w, cells}));
}

Vector vec(std::initializer_list<double> v) {
  Vector x(v.size());
  int i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

br::Field coordinate(const fp::Discretization& d, int a) {
  br::Field phi(d.cells());
  for (std::size_t c = 0; c < phi.size(); ++c) phi[c] = d.grid().center(c)[a];
  return phi;
}

// Random positive density: a Gaussian modulated cell by cell.
GridDistribution bumpy(const PhaseGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = g.dimension();
  Vector m(n), sd(n);
  for (int a = 0; a < n; ++a) {
    m[a] = 0.5 * u(rng);
    sd[a] = 1.0 + 0.3 * u(rng);
  }
  GridDistribution f = fp::gaussian(g, m, sd);
  for (double& v : f.values) v *= 1.0 + 0.2 * u(rng);
  const double mass = f.mass();
  for (double& v : f.values) v /= mass;
  return f;
}

double rel_max(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    d = std::max(d, std::abs(a[c] - b[c]));
    s = std::max(s, std::abs(b[c]));
  }
  return d / s;
}

}  // namespace

TEST_SUITE("metriplectic_brackets") {

TEST_CASE("canonical bracket values") {
  const fp::Discretization d(canonical_2d(), square(2, 6.0, 256));
  const auto f = fp::gaussian(d.grid(), vec({0.3, -0.2}), vec({0.8, 1.1}));
  const auto P = br::linear_functional("p", coordinate(d, 0));
  const auto Q = br::linear_functional("q", coordinate(d, 1));
  // Clamped boundary rows see half the slope of a linear field.
  const int N = d.grid().axis(0).cells;
  double expected = 0.0;
  for (std::size_t c = 0; c < d.cells(); ++c) {
    double w = 1.0;
    for (int a = 0; a < 2; ++a) {
      const int i = d.grid().coordinate(c, a);
      if (i == 0 || i == N - 1) w *= 0.5;
    }
    expected -= w * f.values[c] * d.grid().cell_volume();
  }
  CHECK(std::abs(expected + 1.0) <= 1e-7);
  CHECK(br::poisson_bracket_macro(P, Q, f, d) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(br::poisson_bracket_macro(Q, P, f, d) == doctest::Approx(-expected).epsilon(1e-12));
  const double D = 0.2, h = d.grid().axis(0).width();
  const double pp = br::dissipative_bracket_macro(P, P, f, d, D);
  CHECK(std::abs(pp - D / 2) <= D / 2 * h * h);
  CHECK(br::dissipative_bracket_macro(P, Q, f, d, 0.0) == 0.0);
  const auto obs = br::observables(d, 0.0, 1.0, {});
  CHECK(br::poisson_bracket_macro(obs.E, obs.E, f, d) == 0.0);
}

TEST_CASE("functional derivatives match finite differences") {
  const fp::Discretization d(canonical_2d(), square(2, 6.0, 64));
  std::mt19937_64 rng(2);
  const auto f = bumpy(d.grid(), rng);
  const auto obs = br::observables(d, 0.3, 1.2, {});
  br::Field eta(d.cells());
  for (std::size_t c = 0; c < eta.size(); ++c) {
    const Vector x = d.grid().center(c);
    eta[c] = std::cos(x[0]) * std::exp(-0.1 * x.squaredNorm()) * f.values[c];
  }
  const double eps = 1e-6;
  for (const br::Functional* F : {&obs.N, &obs.E, &obs.S, &obs.Sigma}) {
    GridDistribution a = f, b = f;
    for (std::size_t c = 0; c < eta.size(); ++c) {
      a.values[c] += eps * eta[c];
      b.values[c] -= eps * eta[c];
    }
    const double fd = (F->value(a) - F->value(b)) / (2 * eps);
    const br::Field dF = F->derivative(f);
    double q = 0.0;
    for (std::size_t c = 0; c < eta.size(); ++c) q += dF[c] * eta[c];
    q *= d.grid().cell_volume();
    CAPTURE(F->name);
    CHECK(fd == doctest::Approx(q).epsilon(1e-6));
  }
}

TEST_CASE("metriplectic form reproduces the Fokker-Planck right-hand side") {
  const fp::Solver s(canonical_2d(), square(2, 5.0, 64), 0.2);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 4; ++k) {
    const auto f = bumpy(s.grid(), rng);
    const double b = s.compute_beta(f);
    const auto obs = br::observables(s.disc(), 0.0, b, {});
    const auto rhs = s.fpe_rhs(f, b);
    CHECK(rel_max(br::metriplectic_rhs(f, s.disc(), 0.2, obs), rhs) <= 1e-10);
  }
  const auto eq = s.equilibrium(1.0, {}).first;
  const auto obs = br::observables(s.disc(), 0.0, 1.0, {});
  const auto a = br::metriplectic_rhs(eq, s.disc(), 0.2, obs);
  const auto r = s.fpe_rhs(eq, 1.0);
  double worst = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) worst = std::max(worst, std::abs(a[c] - r[c]));
  CHECK(worst <= 1e-14);
}

TEST_CASE("single generator form converges to the same field") {
  // f J D log f matches J D f only up to the difference stencil.
  double prev = 0.0;
  for (int N : {32, 64, 128}) {
    const fp::Solver s(canonical_2d(), square(2, 6.0, N), 0.2);
    const auto f = fp::gaussian(s.grid(), vec({0.5, -0.3}), vec({1.2, 0.8}));
    const double b = s.compute_beta(f);
    const auto obs = br::observables(s.disc(), 0.0, b, {});
    const double e = rel_max(br::single_generator_rhs(f, s.disc(), 0.2, obs), s.fpe_rhs(f, b));
    if (prev > 0.0) {
      CHECK(prev / e >= 3.5);
      CHECK(prev / e <= 4.5);
    }
    prev = e;
  }
  CHECK(prev <= 5e-3);
}

TEST_CASE("first and second law in bracket form") {
  const fp::Solver s(canonical_2d(), square(2, 7.0, 128), 0.2);
  const auto f = fp::gaussian(s.grid(), vec({0.5, -0.3}), vec({1.4, 0.8}));
  const double b = s.adaptive_beta(f);
  const auto obs = br::observables(s.disc(), 0.0, b, {});
  const double eE = br::dissipative_bracket_macro(obs.E, obs.Sigma, f, s.disc(), 0.2);
  const double sS = br::dissipative_bracket_macro(obs.Sigma, obs.Sigma, f, s.disc(), 0.2);
  CHECK(std::abs(eE) <= 1e-12 * sS);
  CHECK(sS == doctest::Approx(s.entropy_production(f, b)).epsilon(1e-12));
  CHECK(br::poisson_bracket_macro(obs.N, obs.E, f, s.disc()) == 0.0);
  CHECK(std::abs(br::dissipative_bracket_macro(obs.N, obs.Sigma, f, s.disc(), 0.2)) <= 1e-14);
}

TEST_CASE("casimir functionals are inert") {
  // Domain wide enough that the wall layer carries no mass.
  const fp::Discretization d(rigid_body(), square(3, 6.0, 24));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto obs = br::observables(d, 0.0, 1.0, {});
  const auto& C = obs.C.at(0);
  for (int k = 0; k < 3; ++k) {
    const auto f = fp::gaussian(d.grid(), vec({0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng)}),
                                vec({0.5, 0.45, 0.4}));
    br::Field phi(d.cells());
    for (std::size_t c = 0; c < phi.size(); ++c) {
      const Vector x = d.grid().center(c);
      phi[c] = u(rng) + x[0] - 0.5 * x[1] * x[2];
    }
    const auto G = br::linear_functional("G", phi);
    CHECK(std::abs(br::poisson_bracket_macro(C, G, f, d)) <= 1e-12);
    CHECK(std::abs(br::dissipative_bracket_macro(C, G, f, d, 0.3)) <= 1e-12);
    CHECK(std::abs(br::dissipative_bracket_macro(C, obs.Sigma, f, d, 0.3)) <= 1e-12);
  }
}

TEST_CASE("dissipative bracket is non-negative") {
  const fp::Discretization d(canonical_2d(), square(2, 5.0, 32));
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  const auto f = bumpy(d.grid(), rng);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    br::Field phi(d.cells());
    for (double& v : phi) v = nd(rng);
    const auto F = br::linear_functional("F", phi);
    worst = std::min(worst, br::dissipative_bracket_macro(F, F, f, d, 0.2));
  }
  CHECK(worst >= -1e-14);
}

TEST_CASE("axiom suite") {
  BracketVerifyOptions o;
  const auto rep = verify_brackets(canonical_2d(), o);
  CHECK(rep.passed());
  for (const auto& r : rep.results) {
    CAPTURE(r.name);
    CHECK(r.violation <= 1e-10);
  }

  o.cells = 16;
  o.half_width = 2.5;
  CHECK(verify_brackets(rigid_body(), o).passed());

  const auto bad = verify_brackets(symmetrized(canonical_2d()), BracketVerifyOptions{});
  CHECK_FALSE(bad.passed());
  for (const auto& r : bad.results)
    if (r.name == "P2") CHECK_FALSE(r.passed());
}

}  // TEST_SUITE
