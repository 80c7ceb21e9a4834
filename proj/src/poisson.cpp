#include "metriplex/poisson.hpp"

#include <fmt/format.h>

#include <cmath>

namespace metriplex {

double fd_step(double xi) { return 1e-5 * (1.0 + std::abs(xi)); }

PoissonOperatorField::PoissonOperatorField(int n, EvalFn eval,
                                           PartialsFn partials)
    : n_(n), eval_(std::move(eval)), partials_(std::move(partials)) {
  if (n < 1) throw ConfigError("operator dimension must be positive");
  if (!eval_) throw ConfigError("operator needs an evaluation map");
}

void PoissonOperatorField::evaluate(const Vector& x, Matrix& out) const {
  out.resize(n_, n_);
  eval_(x, out);
}

Matrix PoissonOperatorField::operator()(const Vector& x) const {
  Matrix out(n_, n_);
  eval_(x, out);
  return out;
}

std::vector<Matrix> PoissonOperatorField::partials(const Vector& x) const {
  std::vector<Matrix> out(n_, Matrix::Zero(n_, n_));
  if (partials_) {
    partials_(x, out);
    return out;
  }
  Vector xp = x;
  Matrix jp(n_, n_), jm(n_, n_);
  for (int m = 0; m < n_; ++m) {
    const double h = fd_step(x[m]);
    xp[m] = x[m] + h;
    eval_(xp, jp);
    xp[m] = x[m] - h;
    eval_(xp, jm);
    xp[m] = x[m];
    out[m] = (jp - jm) / (2.0 * h);
  }
  return out;
}

ScalarField::ScalarField(std::string name, ValueFn value, GradientFn gradient)
    : name_(std::move(name)),
      value_(std::move(value)),
      gradient_(std::move(gradient)) {
  if (!value_) throw ConfigError("scalar field needs a value map");
}

void ScalarField::gradient(const Vector& x, Vector& out) const {
  if (gradient_) {
    out.resize(x.size());
    gradient_(x, out);
  } else {
    out = fd_gradient(x);
  }
}

Vector ScalarField::gradient(const Vector& x) const {
  Vector out(x.size());
  gradient(x, out);
  return out;
}

Vector ScalarField::fd_gradient(const Vector& x) const {
  Vector out(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i]);
    xp[i] = x[i] + h;
    const double fp = value_(xp);
    xp[i] = x[i] - h;
    const double fm = value_(xp);
    xp[i] = x[i];
    out[i] = (fp - fm) / (2.0 * h);
  }
  return out;
}

double MeasureDensity::operator()(const Vector& x) const {
  return fn_ ? fn_(x) : 1.0;
}

double antisymmetry_violation(const Matrix& j) {
  return (j + j.transpose()).cwiseAbs().maxCoeff();
}

void check_point(const HamiltonianSystem& sys, const Vector& x) {
  if (x.size() != sys.dimension())
    throw std::invalid_argument(fmt::format(
        "point has dimension {} but system '{}' has dimension {}", x.size(),
        sys.name, sys.dimension()));
  if (!x.allFinite())
    throw std::invalid_argument("point has non-finite coordinates");
}

Matrix eval_poisson(const HamiltonianSystem& sys, const Vector& x) {
  check_point(sys, x);
  Matrix j = sys.op(x);
  if (!j.allFinite())
    throw NumericalError("Poisson operator has non-finite entries");
  const double scale = std::max(1.0, j.cwiseAbs().maxCoeff());
  const double v = antisymmetry_violation(j);
  if (v > 1e-12 * scale)
    throw NumericalError(
        fmt::format("Poisson operator not antisymmetric (violation {:.3e})", v));
  return j;
}

double jacobi_residual(const HamiltonianSystem& sys, const Vector& x) {
  check_point(sys, x);
  const int n = sys.dimension();
  const Matrix j = sys.op(x);
  const std::vector<Matrix> p = sys.op.partials(x);
  // a[i](j,k) = J^{im} d_m J^{jk}
  std::vector<Matrix> a(n, Matrix::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int m = 0; m < n; ++m)
      if (j(i, m) != 0.0) a[i] += j(i, m) * p[m];
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int jj = 0; jj < n; ++jj)
      for (int k = 0; k < n; ++k) {
        const double s = a[i](jj, k) + a[jj](k, i) + a[k](i, jj);
        worst = std::max(worst, std::abs(s));
      }
  return worst;
}

Vector casimir_residual(const HamiltonianSystem& sys, std::size_t k,
                        const Vector& x) {
  if (k >= sys.casimirs.size())
    throw std::out_of_range(fmt::format(
        "Casimir index {} out of range ({} declared)", k, sys.casimirs.size()));
  check_point(sys, x);
  return sys.op(x) * sys.casimirs[k].gradient(x);
}

Vector divergence_residual(const HamiltonianSystem& sys, const Vector& x) {
  check_point(sys, x);
  const int n = sys.dimension();
  Vector out = Vector::Zero(n);
  if (sys.measure.is_identity()) {
    const std::vector<Matrix> p = sys.op.partials(x);
    for (int i = 0; i < n; ++i) out += p[i].row(i).transpose();
    return out;
  }
  Vector xp = x;
  for (int i = 0; i < n; ++i) {
    const double h = fd_step(x[i]);
    xp[i] = x[i] + h;
    const Vector up = sys.measure(xp) * sys.op(xp).row(i).transpose();
    xp[i] = x[i] - h;
    const Vector dn = sys.measure(xp) * sys.op(xp).row(i).transpose();
    xp[i] = x[i];
    out += (up - dn) / (2.0 * h);
  }
  return out;
}

double micro_poisson_bracket(const ScalarField& a, const ScalarField& b,
                             const HamiltonianSystem& sys, const Vector& x) {
  check_point(sys, x);
  return a.gradient(x).dot(sys.op(x) * b.gradient(x));
}

double micro_dissipative_bracket(const ScalarField& a, const ScalarField& b,
                                 const HamiltonianSystem& sys, const Vector& x) {
  check_point(sys, x);
  const Matrix j = sys.op(x);
  return (j.transpose() * a.gradient(x)).dot(j.transpose() * b.gradient(x));
}

Matrix metric_tensor(const HamiltonianSystem& sys, const Vector& x) {
  check_point(sys, x);
  const Matrix j = sys.op(x);
  return j * j.transpose();
}

RankReport operator_rank(const HamiltonianSystem& sys, const Vector& x) {
  check_point(sys, x);
  Eigen::JacobiSVD<Matrix> svd(sys.op(x));
  RankReport r;
  r.singular_values = svd.singularValues();
  const double smax = r.singular_values.size() ? r.singular_values[0] : 0.0;
  if (smax == 0.0) return r;
  const double cutoff = 1e-10 * smax;
  for (Eigen::Index i = 0; i < r.singular_values.size(); ++i) {
    const double s = r.singular_values[i];
    if (s > cutoff) ++r.rank;
    if (s > cutoff / 10.0 && s < cutoff * 10.0) r.ambiguous = true;
  }
  r.even = (r.rank % 2) == 0;
  return r;
}

Vector hamiltonian_vector_field(const HamiltonianSystem& sys, const Vector& x) {
  return sys.op(x) * sys.hamiltonian.gradient(x);
}

Vector integrate_hamiltonian_rk4(const HamiltonianSystem& sys, Vector x,
                                 double dt, long steps) {
  check_point(sys, x);
  for (long s = 0; s < steps; ++s) {
    const Vector k1 = hamiltonian_vector_field(sys, x);
    const Vector k2 = hamiltonian_vector_field(sys, x + 0.5 * dt * k1);
    const Vector k3 = hamiltonian_vector_field(sys, x + 0.5 * dt * k2);
    const Vector k4 = hamiltonian_vector_field(sys, x + dt * k3);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

}  // namespace metriplex
