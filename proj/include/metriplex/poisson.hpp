#pragma once

#include "metriplex/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace metriplex {

/// Centered finite-difference step used by every verifier.
double fd_step(double xi);

/// State-dependent bivector J(x).  `evaluate` is the raw map; it does not
/// validate antisymmetry so that corrupted operators can be inspected.
class PoissonOperatorField {
 public:
  using EvalFn = std::function<void(const Vector&, Matrix&)>;
  /// partials[m](i, j) = d J^{ij} / d x^m
  using PartialsFn = std::function<void(const Vector&, std::vector<Matrix>&)>;

  PoissonOperatorField() = default;
  PoissonOperatorField(int n, EvalFn eval, PartialsFn partials = {});

  int dimension() const { return n_; }
  void evaluate(const Vector& x, Matrix& out) const;
  Matrix operator()(const Vector& x) const;

  bool has_analytic_partials() const { return static_cast<bool>(partials_); }
  /// Analytic partials when supplied, centered differences otherwise.
  std::vector<Matrix> partials(const Vector& x) const;

 private:
  int n_ = 0;
  EvalFn eval_;
  PartialsFn partials_;
};

class ScalarField {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<void(const Vector&, Vector&)>;

  ScalarField() = default;
  ScalarField(std::string name, ValueFn value, GradientFn gradient = {});

  const std::string& name() const { return name_; }
  double operator()(const Vector& x) const { return value_(x); }
  bool has_analytic_gradient() const { return static_cast<bool>(gradient_); }
  void gradient(const Vector& x, Vector& out) const;
  Vector gradient(const Vector& x) const;
  /// Centered finite-difference gradient, independent of any analytic one.
  Vector fd_gradient(const Vector& x) const;

 private:
  std::string name_;
  ValueFn value_;
  GradientFn gradient_;
};

/// Weight J(x) of the invariant measure J dV.  A default-constructed
/// density is the identity (coordinates already span the measure).
class MeasureDensity {
 public:
  using ValueFn = std::function<double(const Vector&)>;

  MeasureDensity() = default;
  explicit MeasureDensity(ValueFn fn) : fn_(std::move(fn)) {}

  bool is_identity() const { return !fn_; }
  double operator()(const Vector& x) const;

 private:
  ValueFn fn_;
};

struct HamiltonianSystem {
  std::string name;
  PoissonOperatorField op;
  ScalarField hamiltonian;
  std::vector<ScalarField> casimirs;
  MeasureDensity measure;

  int dimension() const { return op.dimension(); }
};

struct RankReport {
  int rank = 0;
  bool ambiguous = false;
  bool even = true;
  Vector singular_values;
};

/// max |J^{ij} + J^{ji}|
double antisymmetry_violation(const Matrix& j);

/// Checked evaluation: dimension, finiteness and antisymmetry.
Matrix eval_poisson(const HamiltonianSystem& sys, const Vector& x);

/// max over (i,j,k) of |J^{im} d_m J^{jk} + cyclic|.
double jacobi_residual(const HamiltonianSystem& sys, const Vector& x);

/// J grad C^k at x.
Vector casimir_residual(const HamiltonianSystem& sys, std::size_t k,
                        const Vector& x);

/// d_i (J J^{ij}) at x.
Vector divergence_residual(const HamiltonianSystem& sys, const Vector& x);

double micro_poisson_bracket(const ScalarField& a, const ScalarField& b,
                             const HamiltonianSystem& sys, const Vector& x);
double micro_dissipative_bracket(const ScalarField& a, const ScalarField& b,
                                 const HamiltonianSystem& sys, const Vector& x);

/// g = J J^T
Matrix metric_tensor(const HamiltonianSystem& sys, const Vector& x);

RankReport operator_rank(const HamiltonianSystem& sys, const Vector& x);

/// x' = J grad H
Vector hamiltonian_vector_field(const HamiltonianSystem& sys, const Vector& x);

/// Classical RK4 on the unperturbed flow.
Vector integrate_hamiltonian_rk4(const HamiltonianSystem& sys, Vector x,
                                 double dt, long steps);

void check_point(const HamiltonianSystem& sys, const Vector& x);

}  // namespace metriplex
