#include "metriplex/fokker_planck.hpp"
#include "metriplex/systems.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace metriplex;

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

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

}  // namespace

TEST_SUITE("fokker_planck_grid") {

TEST_CASE("logarithmic mean") {
  CHECK(fp::logarithmic_mean(2.0, 2.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(fp::logarithmic_mean(1.0, std::numbers::e) ==
        doctest::Approx(std::numbers::e - 1.0).epsilon(1e-14));
  // (b - a) / log(b / a) = 1 + e/2 - e^2/12 + ... at a = 1, b = 1 + e
  CHECK(fp::logarithmic_mean(1.0, 1.0 + 1e-6) ==
        doctest::Approx(1.0 + 5e-7 - 1e-12 / 12.0).epsilon(1e-15));
  CHECK(fp::logarithmic_mean(0.0, 1.0) == 0.0);
  CHECK(fp::logarithmic_mean(3.0, 5.0) == fp::logarithmic_mean(5.0, 3.0));
}

TEST_CASE("difference operator and its flux form") {
  const PhaseGrid g = square(2, 1.0, 8);
  const fp::Stencil st(g);
  std::vector<double> phi(g.size()), d;
  Vector x;
  for (std::size_t c = 0; c < g.size(); ++c) {
    g.center(c, x);
    phi[c] = 3.0 * x[0] - 2.0 * x[1];
  }
  st.gradient(phi, d);
  for (std::size_t c = 0; c < g.size(); ++c) {
    const int i = g.coordinate(c, 0), j = g.coordinate(c, 1);
    const double wx = (i == 0 || i == 7) ? 0.5 : 1.0;
    const double wy = (j == 0 || j == 7) ? 0.5 : 1.0;
    CHECK(d[2 * c] == doctest::Approx(3.0 * wx).epsilon(1e-12));
    CHECK(d[2 * c + 1] == doctest::Approx(-2.0 * wy).epsilon(1e-12));
  }

  std::vector<double> w(2 * g.size()), dt;
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::sin(0.37 * k + 1.0);
  st.gradient_transpose(w, dt);
  const fp::FluxField flux = fp::flux_from_cell_field(g, w);
  const std::vector<double> div = flux.divergence();
  for (std::size_t c = 0; c < g.size(); ++c) CHECK(div[c] == doctest::Approx(dt[c]).epsilon(1e-12));
  CHECK(flux.boundary_max() == 0.0);
  double total = 0.0;
  for (double v : dt) total += v;
  CHECK(std::abs(total) < 1e-13);
}

TEST_CASE("canonical equilibrium and partition function") {
  const auto sys = canonical_2d();
  double prev = 0.0;
  for (int N : {64, 128}) {
    const fp::Solver s(sys, square(2, 7.0, N), 0.2);
    const auto [eq, par] = s.equilibrium(1.0, {});
    CHECK(eq.mass() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(par.Z == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-6));
    CHECK(par.boundary_mass < 1e-10);
    const double r = max_abs(s.fpe_rhs(eq, 1.0));
    if (prev > 0.0) {
      CHECK(prev / r >= 3.5);
      CHECK(prev / r <= 4.5);
    }
    prev = r;
  }
  const fp::Solver wide(sys, square(2, 9.0, 96), 0.2);
  const auto hot = wide.equilibrium(0.5, {}).second;
  CHECK(hot.Z == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-4));

  const fp::Solver s(sys, square(2, 6.0, 64), 0.2);
  const auto flat = s.equilibrium(0.0, {}).first;
  for (double v : flat.values) CHECK(v == doctest::Approx(flat.values[0]).epsilon(1e-14));
  CHECK(flat.values[0] == doctest::Approx(1.0 / 144.0).epsilon(1e-13));
}

TEST_CASE("compute_beta") {
  const auto sys = canonical_2d();
  const fp::Solver s(sys, square(2, 7.0, 128), 0.2);
  for (double b : {0.5, 1.0, 2.0}) {
    const auto eq = s.equilibrium(b, {}).first;
    CHECK(std::abs(s.compute_beta(eq) - b) <= 1e-6);
  }
  GridDistribution flat{s.grid(), std::vector<double>(s.grid().size(), 1.0 / (14.0 * 14.0))};
  CHECK(std::abs(s.compute_beta(flat)) <= 1e-12);

  GridDistribution spike{s.grid(), std::vector<double>(s.grid().size(), 0.0)};
  Vector o = Vector::Zero(2);
  spike.values[*s.grid().locate(o + vec({0.01, 0.01}))] = 1.0 / s.grid().cell_volume();
  CHECK_THROWS_AS(s.compute_beta(spike), fp::DegenerateDenominator);
}

TEST_CASE("rigid-body equilibrium with a casimir multiplier") {
  const auto rb = rigid_body();
  const fp::Solver s(rb, square(3, 8.0, 32), 0.2);
  const auto eq = s.equilibrium(0.8, {0.6}).first;
  const auto& disc = s.disc();
  std::vector<double> lf(eq.values.size()), d;
  for (std::size_t c = 0; c < lf.size(); ++c)
    lf[c] = std::log(eq.values[c]) + 0.8 * disc.H()[c];
  disc.stencil().gradient(lf, d);
  double worst = 0.0;
  for (std::size_t c = 0; c < lf.size(); ++c) {
    bool interior = true;
    for (int a = 0; a < 3; ++a) {
      const int i = s.grid().coordinate(c, a);
      interior = interior && i > 0 && i < 31;
    }
    if (!interior) continue;
    const double* J = disc.J(c);
    for (int i = 0; i < 3; ++i) {
      double v = 0.0;
      for (int j = 0; j < 3; ++j) v += J[i * 3 + j] * d[c * 3 + j];
      worst = std::max(worst, std::abs(v));
    }
  }
  CHECK(worst <= 1e-10);
  CHECK(std::abs(s.compute_beta(eq) - 0.8) <= 1e-6);
}

TEST_CASE("hamiltonian limit conserves mass and energy") {
  const auto sys = canonical_2d();
  const fp::Solver s(sys, square(2, 6.0, 64), 0.0);
  const auto f = fp::gaussian(s.grid(), vec({0.7, -0.4}), vec({0.9, 1.3}));
  const std::vector<double> r = s.fpe_rhs(f, 1.0);
  double dn = 0.0, de = 0.0, scale = 0.0;
  for (std::size_t c = 0; c < r.size(); ++c) {
    dn += r[c];
    de += r[c] * s.disc().H()[c];
    scale += std::abs(r[c]);
  }
  CHECK(std::abs(dn) <= 1e-13 * scale);
  CHECK(std::abs(de) <= 1e-12 * scale);
  CHECK(s.entropy_production(f, 1.0) == 0.0);
}

TEST_CASE("casimir-only density with beta = 0 is only advected") {
  const auto rb = rigid_body();
  const fp::Solver diss(rb, square(3, 4.0, 20), 0.3);
  const fp::Solver cons(rb, square(3, 4.0, 20), 0.0);
  const auto f = diss.equilibrium(0.0, {1.0}).first;
  const auto a = diss.fpe_rhs(f, 0.0);
  const auto b = cons.fpe_rhs(f, 0.0);
  double worst = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    bool deep = true;
    for (int ax = 0; ax < 3; ++ax) {
      const int i = diss.grid().coordinate(c, ax);
      deep = deep && i > fp::kWallLayer && i < 19 - fp::kWallLayer;
    }
    if (deep) worst = std::max(worst, std::abs(a[c] - b[c]));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("entropy production") {
  const auto sys = canonical_2d();
  const fp::Solver s(sys, square(2, 8.0, 128), 0.2);
  const auto eq = s.equilibrium(1.0, {}).first;
  CHECK(s.entropy_production(eq, 1.0) <= 1e-6);

  const auto f = fp::gaussian(s.grid(), vec({0.5, -0.3}), vec({1.4, 0.8}));
  const double b0 = s.adaptive_beta(f);
  CHECK(s.entropy_production(f, b0) > 0.0);
  const auto mode = fp::BetaSetting::adapt();
  const double dt = 0.2 * s.stability_bound(b0);
  const auto f1 = s.step(f, dt, mode);
  const auto f2 = s.step(f1, dt, mode);
  const double measured = (fp::observable_S(f2) - fp::observable_S(f)) / (2 * dt);
  const double predicted = s.entropy_production(f1, s.adaptive_beta(f1));
  CHECK(measured == doctest::Approx(predicted).epsilon(0.01));
}

TEST_CASE("gaussian observables") {
  const fp::Solver s(canonical_2d(), square(2, 8.0, 128), 0.2);
  const auto f = fp::gaussian(s.grid(), vec({0, 0}), vec({1, 1}));
  CHECK(fp::observable_N(f) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fp::observable_E(f, s.disc()) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(fp::observable_S(f) ==
        doctest::Approx(std::log(2 * std::numbers::pi * std::numbers::e)).epsilon(1e-3));
  CHECK(fp::l1_distance(f, f) == 0.0);
  CHECK(fp::negative_mass(f) == 0.0);
}

TEST_CASE("time step guard and beta settings") {
  const fp::Solver s(canonical_2d(), square(2, 6.0, 32), 0.2);
  const auto f = fp::gaussian(s.grid(), vec({0, 0}), vec({1, 1}));
  const double bound = s.stability_bound(1.0);
  CHECK(std::isfinite(bound));
  try {
    s.step(f, 2.0 * bound, fp::BetaSetting::fixed(1.0));
    FAIL("no stability error");
  } catch (const fp::StabilityError& e) {
    CHECK(e.suggested_dt() < bound);
  }
  CHECK_NOTHROW(s.step(f, 0.5 * bound, fp::BetaSetting::fixed(1.0)));

  CHECK(fp::BetaSetting::parse("adaptive").adaptive);
  const auto fx = fp::BetaSetting::parse("fixed:2.5");
  CHECK_FALSE(fx.adaptive);
  CHECK(fx.value == 2.5);
  CHECK_THROWS_AS(fp::BetaSetting::parse("fixed:"), ConfigError);
  CHECK_THROWS_AS(fp::BetaSetting::parse("hot"), ConfigError);
}

TEST_CASE("short relaxation run") {
  const fp::Solver s(canonical_2d(), square(2, 7.0, 64), 0.2);
  const auto f = fp::gaussian(s.grid(), vec({0.8, 0.0}), vec({1.2, 0.7}));
  const double dt = 0.5 * s.stability_bound(s.adaptive_beta(f));
  const auto res = s.relax_to_equilibrium(f, dt, 1.0, fp::BetaSetting::adapt());
  CHECK(res.max_entropy_drop <= 1e-12);
  CHECK(res.max_energy_drift <= 1e-10);
  CHECK(res.max_mass_drift <= 1e-12);
  CHECK(res.series.front().t == 0.0);
  CHECK(res.series.back().t == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(res.series.back().L1_eq < res.series.front().L1_eq);
}

}  // TEST_SUITE
