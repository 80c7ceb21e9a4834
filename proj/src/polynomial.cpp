#include "metriplex/polynomial.hpp"

#include <fmt/format.h>

#include <cmath>

namespace metriplex {

Polynomial::Polynomial(int n, std::vector<Monomial> terms)
    : n_(n), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (static_cast<int>(t.powers.size()) != n_)
      throw ConfigError("monomial exponent list has wrong length");
    for (int p : t.powers)
      if (p < 0) throw ConfigError("monomial exponents must be nonnegative");
  }
}

double Polynomial::operator()(const Vector& x) const {
  double sum = 0.0;
  for (const auto& t : terms_) {
    double v = t.coef;
    for (int i = 0; i < n_; ++i)
      for (int k = 0; k < t.powers[i]; ++k) v *= x[i];
    sum += v;
  }
  return sum;
}

Polynomial Polynomial::derivative(int var) const {
  std::vector<Monomial> out;
  for (const auto& t : terms_) {
    if (t.powers[var] == 0) continue;
    Monomial m = t;
    m.coef *= t.powers[var];
    m.powers[var] -= 1;
    out.push_back(std::move(m));
  }
  return Polynomial(n_, std::move(out));
}

void Polynomial::gradient(const Vector& x, Vector& out) const {
  out.setZero(n_);
  for (const auto& t : terms_) {
    for (int d = 0; d < n_; ++d) {
      if (t.powers[d] == 0) continue;
      double v = t.coef * t.powers[d];
      for (int i = 0; i < n_; ++i) {
        const int p = (i == d) ? t.powers[i] - 1 : t.powers[i];
        for (int k = 0; k < p; ++k) v *= x[i];
      }
      out[d] += v;
    }
  }
}

Polynomial Polynomial::from_json(const nlohmann::json& j, int n,
                                 const std::string& where) {
  if (!j.is_array())
    throw ConfigError(fmt::format("{}: expected a list of terms", where));
  std::vector<Monomial> terms;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const auto& t = j[k];
    const std::string at = fmt::format("{}[{}]", where, k);
    if (!t.is_object())
      throw ConfigError(fmt::format("{}: term must be an object", at));
    for (const auto& [key, _] : t.items())
      if (key != "coef" && key != "powers")
        throw ConfigError(fmt::format("unknown key '{}.{}'", at, key));
    if (!t.contains("coef") || !t["coef"].is_number())
      throw ConfigError(fmt::format("{}.coef: number required", at));
    if (!t.contains("powers") || !t["powers"].is_array() ||
        static_cast<int>(t["powers"].size()) != n)
      throw ConfigError(
          fmt::format("{}.powers: list of {} integers required", at, n));
    Monomial m;
    m.coef = t["coef"].get<double>();
    if (!std::isfinite(m.coef))
      throw ConfigError(fmt::format("{}.coef: must be finite", at));
    for (const auto& p : t["powers"]) {
      if (!p.is_number_integer() || p.get<int>() < 0)
        throw ConfigError(
            fmt::format("{}.powers: nonnegative integers required", at));
      m.powers.push_back(p.get<int>());
    }
    terms.push_back(std::move(m));
  }
  return Polynomial(n, std::move(terms));
}

}  // namespace metriplex
