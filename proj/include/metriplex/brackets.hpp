#pragma once

#include "metriplex/fokker_planck.hpp"

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace metriplex::brackets {

using Field = std::vector<double>;

struct Functional {
  std::string name;
  std::function<double(const GridDistribution&)> value;
  /// dF/df as a cell field.
  std::function<Field(const GridDistribution&)> derivative;
};

/// F[f] = sum f phi dV, with dF/df = phi independent of f.
Functional linear_functional(std::string name, Field phi);
/// a F + b G
Functional combine(double a, const Functional& F, double b,
                   const Functional& G);
/// Pointwise product F[f] G[f].
Functional product(const Functional& F, const Functional& G);

struct ObservableSet {
  Functional N, E, S, Sigma;
  std::vector<Functional> C;
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> mu;
};

ObservableSet observables(const fp::Discretization& disc, double alpha,
                          double beta, std::vector<double> mu);

/// {F,G} = sum dV f (D F') . J (D G')
double poisson_bracket_macro(const Functional& F, const Functional& G,
                             const GridDistribution& f,
                             const fp::Discretization& disc);
/// [F,G] = (D/2) sum dV (D F') . M (D G') plus the wall-face term, M the
/// mobility of f
double dissipative_bracket_macro(const Functional& F, const Functional& G,
                                 const GridDistribution& f,
                                 const fp::Discretization& disc, double D);

/// {f,E} + [f,Sigma] with the delta-function derivative realised as the
/// transpose of the difference operator.
Field metriplectic_rhs(const GridDistribution& f, const fp::Discretization& disc,
                       double D, const ObservableSet& obs);
/// -{f,Sigma}/beta + [f,Sigma]
Field single_generator_rhs(const GridDistribution& f,
                           const fp::Discretization& disc, double D,
                           const ObservableSet& obs);

struct AxiomResult {
  std::string name;
  std::string description;
  double violation = 0.0;
  double threshold = 0.0;
  bool passed() const { return violation <= threshold; }
};

struct AxiomReport {
  std::vector<AxiomResult> results;
  bool passed() const;
  nlohmann::json to_json() const;
};

/// Checks P1-P5 and D1-D4 over all sample distributions and functionals.
/// Functionals must have f-independent derivatives.
AxiomReport axiom_suite(const fp::Discretization& disc, double D,
                        const std::vector<GridDistribution>& f_samples,
                        const std::vector<Functional>& functionals,
                        std::uint64_t seed = 1);

}  // namespace metriplex::brackets
