#pragma once

#include "metriplex/types.hpp"

#include <json.hpp>

#include <vector>

namespace metriplex {

struct Monomial {
  double coef = 0.0;
  std::vector<int> powers;
};

/// Sparse multivariate polynomial in n variables.
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(int n, std::vector<Monomial> terms);

  int variables() const { return n_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  double operator()(const Vector& x) const;
  Polynomial derivative(int var) const;
  void gradient(const Vector& x, Vector& out) const;

  /// Parse a term list: [{"coef": c, "powers": [..]}, ...].
  static Polynomial from_json(const nlohmann::json& j, int n,
                              const std::string& where);

 private:
  int n_ = 0;
  std::vector<Monomial> terms_;
};

}  // namespace metriplex
