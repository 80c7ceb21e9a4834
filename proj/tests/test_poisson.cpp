#include "metriplex/poisson.hpp"
#include "metriplex/systems.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace metriplex;

namespace {

Vector v2(double a, double b) {
  Vector x(2);
  x << a, b;
  return x;
}

Vector v3(double a, double b, double c) {
  Vector x(3);
  x << a, b, c;
  return x;
}

double levi_civita(int i, int j, int k) {
  return 0.5 * (i - j) * (j - k) * (k - i);
}

// Brute-force cyclic sum from centred differences of the raw operator.
double cyclic_sum_fd(const PoissonOperatorField& op, const Vector& x) {
  const int n = op.dimension();
  std::vector<Matrix> d(n);
  const double h = 1e-5;
  for (int m = 0; m < n; ++m) {
    Vector a = x, b = x;
    a[m] += h;
    b[m] -= h;
    d[m] = (op(a) - op(b)) / (2 * h);
  }
  const Matrix j = op(x);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        double s = 0.0;
        for (int m = 0; m < n; ++m)
          s += j(i, m) * d[m](k, l) + j(k, m) * d[m](l, i) + j(l, m) * d[m](i, k);
        worst = std::max(worst, std::abs(s));
      }
  return worst;
}

}  // namespace

TEST_SUITE("poisson_core") {

TEST_CASE("canonical operator is the symplectic matrix") {
  const auto sys = canonical_2d();
  const Matrix j = eval_poisson(sys, v2(0.3, 0.5));
  CHECK(j(0, 0) == 0.0);
  CHECK(j(0, 1) == -1.0);
  CHECK(j(1, 0) == 1.0);
  CHECK(j(1, 1) == 0.0);
}

TEST_CASE("rigid-body operator at (1,2,3)") {
  const auto sys = rigid_body();
  const Vector x = v3(1, 2, 3);
  const Matrix j = eval_poisson(sys, x);
  Matrix expect(3, 3);
  expect << 0, 3, -2, -3, 0, 1, 2, -1, 0;
  CHECK((j - expect).cwiseAbs().maxCoeff() == 0.0);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += levi_civita(a, b, k) * x[k];
      CHECK(j(a, b) == s);
    }
}

TEST_CASE("non-finite points are rejected") {
  const auto sys = rigid_body();
  CHECK_THROWS(eval_poisson(sys, v3(1, std::nan(""), 0)));
  CHECK_THROWS(eval_poisson(sys, v2(0, 0)));
}

TEST_CASE("jacobi residual") {
  CHECK(jacobi_residual(canonical_2d(), v2(0.7, -1.1)) == 0.0);
  const auto rb = rigid_body();
  CHECK(rb.op.has_analytic_partials());
  CHECK(jacobi_residual(rb, v3(1, 2, 3)) <= 1e-10);

  const auto bad = corrupted_demo();
  const Vector x = v3(1, 2, 3);
  const double r = jacobi_residual(bad, x);
  CHECK(r > 0.1);
  CHECK(r == doctest::Approx(cyclic_sum_fd(bad.op, x)).epsilon(1e-6));
}

TEST_CASE("casimir residual") {
  const auto rb = rigid_body();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 20; ++k) {
    const Vector x = v3(nd(rng), nd(rng), nd(rng));
    CHECK(casimir_residual(rb, 0, x).cwiseAbs().maxCoeff() <= 1e-15);
  }
  auto canon = canonical_2d();
  canon.casimirs.push_back(
      ScalarField("p", [](const Vector& x) { return x[0]; }));
  const Vector r = casimir_residual(canon, 0, v2(0.2, 0.4));
  CHECK(r[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("divergence vanishes for the flat measure") {
  CHECK(divergence_residual(canonical_2d(), v2(1, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(divergence_residual(rigid_body(), v3(0.4, -2, 1.5)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("microscopic brackets") {
  const auto sys = canonical_2d();
  const ScalarField p("p", [](const Vector& x) { return x[0]; });
  const ScalarField q("q", [](const Vector& x) { return x[1]; });
  for (const Vector& x : {v2(0, 0), v2(1.5, -2), v2(-3, 0.25)}) {
    CHECK(micro_poisson_bracket(q, p, sys, x) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(micro_poisson_bracket(p, p, sys, x) == doctest::Approx(0.0));
    CHECK(micro_poisson_bracket(sys.hamiltonian, sys.hamiltonian, sys, x) == 0.0);
    CHECK(micro_dissipative_bracket(p, p, sys, x) == doctest::Approx(1.0).epsilon(1e-9));
  }
  const ScalarField one("one", [](const Vector&) { return 1.0; });
  CHECK(micro_dissipative_bracket(one, one, sys, v2(0.5, 0.5)) == 0.0);

  const auto rb = rigid_body();
  const Vector x = v3(0.3, -1, 2);
  CHECK(std::abs(micro_dissipative_bracket(rb.casimirs[0], rb.casimirs[0], rb, x)) <= 1e-14);
}

TEST_CASE("metric tensor") {
  const Matrix gc = metric_tensor(canonical_2d(), v2(1, 1));
  CHECK((gc - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  const auto rb = rigid_body();
  const Vector x = v3(1, 2, 3);
  const Matrix j = rb.op(x);
  Matrix brute = Matrix::Zero(3, 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int k = 0; k < 3; ++k) brute(a, b) += j(a, k) * j(b, k);
  Matrix expect(3, 3);
  expect << 13, -2, -3, -2, 10, -6, -3, -6, 5;
  CHECK((brute - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK((metric_tensor(rb, x) - expect).cwiseAbs().maxCoeff() == 0.0);

  HamiltonianSystem zero = rb;
  zero.op = PoissonOperatorField(3, [](const Vector&, Matrix& out) { out.setZero(3, 3); });
  CHECK(metric_tensor(zero, x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("operator rank") {
  CHECK(operator_rank(canonical_2d(), v2(0.1, 0.2)).rank == 2);
  const auto rb = rigid_body();
  const RankReport r = operator_rank(rb, v3(1, 2, 3));
  CHECK(r.rank == 2);
  CHECK(r.even);
  CHECK(r.singular_values.size() == 3);
  CHECK(r.singular_values[0] == doctest::Approx(std::sqrt(14.0)));
  CHECK(operator_rank(rb, v3(0, 0, 0)).rank == 0);
}

TEST_CASE("hamiltonian flow conserves energy and casimir") {
  const auto rb = rigid_body();
  const Vector x0 = v3(1, 0.5, -0.3);
  const Vector x1 = integrate_hamiltonian_rk4(rb, x0, 1e-3, 1000);
  CHECK(std::abs(rb.hamiltonian(x1) - rb.hamiltonian(x0)) <= 1e-12);
  CHECK(std::abs(rb.casimirs[0](x1) - rb.casimirs[0](x0)) <= 1e-12);

  const auto canon = canonical_2d();
  // Exact rotation: p(t) = cos t, q(t) = sin t.
  const Vector y = integrate_hamiltonian_rk4(canon, v2(1, 0), 1e-3, 1000);
  CHECK(y[0] == doctest::Approx(std::cos(1.0)).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
}

TEST_CASE("polynomial systems from term lists") {
  const nlohmann::json spec = {
      {"dimension", 3},
      {"poisson",
       {{{"i", 0}, {"j", 1}, {"terms", {{{"coef", 1.0}, {"powers", {0, 0, 1}}}}}},
        {{"i", 0}, {"j", 2}, {"terms", {{{"coef", -1.0}, {"powers", {0, 1, 0}}}}}},
        {{"i", 1}, {"j", 2}, {"terms", {{{"coef", 1.0}, {"powers", {1, 0, 0}}}}}}}},
      {"hamiltonian",
       {{{"coef", 0.5}, {"powers", {2, 0, 0}}},
        {{"coef", 0.25}, {"powers", {0, 2, 0}}},
        {{"coef", 1.0 / 6.0}, {"powers", {0, 0, 2}}}}},
      {"casimirs",
       {{{{"coef", 0.5}, {"powers", {2, 0, 0}}},
         {{"coef", 0.5}, {"powers", {0, 2, 0}}},
         {{"coef", 0.5}, {"powers", {0, 0, 2}}}}}}};
  const auto poly = polynomial_system(spec);
  const auto rb = rigid_body();
  const Vector x = v3(0.3, -1.2, 0.8);
  CHECK((poly.op(x) - rb.op(x)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(poly.hamiltonian(x) == doctest::Approx(rb.hamiltonian(x)).epsilon(1e-15));
  CHECK(jacobi_residual(poly, x) <= 1e-12);
  CHECK(casimir_residual(poly, 0, x).cwiseAbs().maxCoeff() <= 1e-15);

  nlohmann::json bad = spec;
  bad["poisson"][0]["i"] = 2;
  CHECK_THROWS_AS(polynomial_system(bad), ConfigError);
  bad = spec;
  bad["extra"] = 1;
  CHECK_THROWS_AS(polynomial_system(bad), ConfigError);
}

TEST_CASE("unknown systems") {
  CHECK_THROWS_AS(make_system("nosuch"), UnknownSystem);
  CHECK(make_system("chm", {2, 0.0, ""}).dimension() == 25);
}

}  // TEST_SUITE
