#include "metriplex/systems.hpp"

#include "metriplex/chm.hpp"
#include "metriplex/polynomial.hpp"

#include <fmt/format.h>

#include <fstream>
#include <memory>

namespace metriplex {

HamiltonianSystem canonical_2d() {
  HamiltonianSystem sys;
  sys.name = "canonical-2d";
  sys.op = PoissonOperatorField(
      2,
      [](const Vector&, Matrix& j) {
        j << 0.0, -1.0, 1.0, 0.0;
      },
      [](const Vector&, std::vector<Matrix>& p) {
        for (auto& m : p) m.setZero(2, 2);
      });
  sys.hamiltonian = ScalarField(
      "H", [](const Vector& x) { return 0.5 * x.squaredNorm(); },
      [](const Vector& x, Vector& g) { g = x; });
  return sys;
}

namespace {

void levi_civita(const Vector& x, Matrix& j) {
  j.resize(3, 3);
  j << 0.0, x[2], -x[1],
      -x[2], 0.0, x[0],
      x[1], -x[0], 0.0;
}

void levi_civita_partials(const Vector&, std::vector<Matrix>& p) {
  // d_m J^{ij} = eps^{ijm}
  for (int m = 0; m < 3; ++m) {
    p[m].setZero(3, 3);
    const int a = (m + 1) % 3, b = (m + 2) % 3;
    p[m](a, b) = 1.0;
    p[m](b, a) = -1.0;
  }
}

}  // namespace

HamiltonianSystem rigid_body(const Eigen::Vector3d& inertia) {
  if ((inertia.array() <= 0.0).any())
    throw ConfigError("moments of inertia must be positive");
  HamiltonianSystem sys;
  sys.name = "rigid-body";
  sys.op = PoissonOperatorField(3, levi_civita, levi_civita_partials);
  const Eigen::Vector3d inv = inertia.cwiseInverse();
  sys.hamiltonian = ScalarField(
      "H",
      [inv](const Vector& x) {
        return 0.5 * (inv.array() * x.array().square()).sum();
      },
      [inv](const Vector& x, Vector& g) {
        g = (inv.array() * x.array()).matrix();
      });
  sys.casimirs.emplace_back(
      "C", [](const Vector& x) { return 0.5 * x.squaredNorm(); },
      [](const Vector& x, Vector& g) { g = x; });
  return sys;
}

HamiltonianSystem corrupted_demo() {
  HamiltonianSystem sys = rigid_body();
  sys.name = "corrupted-demo";
  sys.op = PoissonOperatorField(
      3,
      [](const Vector& x, Matrix& j) {
        levi_civita(x, j);
        j(0, 1) = x[0] * x[1];
        j(1, 0) = -x[0] * x[1];
      },
      [](const Vector& x, std::vector<Matrix>& p) {
        levi_civita_partials(x, p);
        p[2](0, 1) = p[2](1, 0) = 0.0;
        p[0](0, 1) = x[1];
        p[0](1, 0) = -x[1];
        p[1](0, 1) = x[0];
        p[1](1, 0) = -x[0];
      });
  return sys;
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok)
      throw ConfigError(fmt::format(
          "unknown key '{}'", where.empty() ? key : where + "." + key));
  }
}

ScalarField polynomial_field(std::string name, Polynomial poly) {
  auto p = std::make_shared<const Polynomial>(std::move(poly));
  return ScalarField(
      std::move(name), [p](const Vector& x) { return (*p)(x); },
      [p](const Vector& x, Vector& g) { p->gradient(x, g); });
}

}  // namespace

HamiltonianSystem polynomial_system(const nlohmann::json& spec) {
  if (!spec.is_object()) throw ConfigError("system file must be an object");
  reject_unknown(spec, "",
                 {"name", "dimension", "poisson", "hamiltonian", "casimirs"});
  if (!spec.contains("dimension") || !spec["dimension"].is_number_integer())
    throw ConfigError("dimension: integer required");
  const int n = spec["dimension"].get<int>();
  if (n < 1) throw ConfigError("dimension must be positive");
  if (!spec.contains("hamiltonian"))
    throw ConfigError("hamiltonian: term list required");

  struct Entry {
    int i, j;
    Polynomial poly;
    std::vector<Polynomial> partials;
  };
  std::vector<Entry> entries;
  if (spec.contains("poisson")) {
    const auto& list = spec["poisson"];
    if (!list.is_array()) throw ConfigError("poisson: list of entries required");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto& e = list[k];
      const std::string at = fmt::format("poisson[{}]", k);
      if (!e.is_object()) throw ConfigError(at + ": object required");
      reject_unknown(e, at, {"i", "j", "terms"});
      if (!e.contains("i") || !e.contains("j") ||
          !e["i"].is_number_integer() || !e["j"].is_number_integer())
        throw ConfigError(at + ": integer indices i and j required");
      const int i = e["i"].get<int>(), j = e["j"].get<int>();
      if (i < 0 || j < 0 || i >= n || j >= n || i >= j)
        throw ConfigError(at + ": need 0 <= i < j < dimension");
      Entry en{i, j, Polynomial::from_json(e.value("terms", nlohmann::json::array()),
                                           n, at + ".terms"),
               {}};
      for (int m = 0; m < n; ++m) en.partials.push_back(en.poly.derivative(m));
      entries.push_back(std::move(en));
    }
  }
  auto shared = std::make_shared<const std::vector<Entry>>(std::move(entries));

  HamiltonianSystem sys;
  sys.name = spec.value("name", std::string("polynomial"));
  sys.op = PoissonOperatorField(
      n,
      [shared, n](const Vector& x, Matrix& out) {
        out.setZero(n, n);
        for (const auto& e : *shared) {
          const double v = e.poly(x);
          out(e.i, e.j) += v;
          out(e.j, e.i) -= v;
        }
      },
      [shared, n](const Vector& x, std::vector<Matrix>& p) {
        for (auto& m : p) m.setZero(n, n);
        for (const auto& e : *shared)
          for (int m = 0; m < n; ++m) {
            const double v = e.partials[m](x);
            p[m](e.i, e.j) += v;
            p[m](e.j, e.i) -= v;
          }
      });
  sys.hamiltonian = polynomial_field(
      "H", Polynomial::from_json(spec["hamiltonian"], n, "hamiltonian"));
  if (spec.contains("casimirs")) {
    const auto& list = spec["casimirs"];
    if (!list.is_array()) throw ConfigError("casimirs: list required");
    for (std::size_t k = 0; k < list.size(); ++k)
      sys.casimirs.push_back(polynomial_field(
          fmt::format("C{}", k + 1),
          Polynomial::from_json(list[k], n, fmt::format("casimirs[{}]", k))));
  }
  return sys;
}

HamiltonianSystem load_polynomial_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open system file '{}'", path));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("system file '{}': {}", path, e.what()));
  }
  return polynomial_system(j);
}

HamiltonianSystem with_operator(const HamiltonianSystem& sys,
                                PoissonOperatorField op, std::string name) {
  HamiltonianSystem out = sys;
  out.op = std::move(op);
  out.name = std::move(name);
  return out;
}

std::vector<std::string> system_names() {
  return {"canonical-2d", "rigid-body", "corrupted-demo", "chm", "polynomial"};
}

HamiltonianSystem make_system(const std::string& name,
                              const SystemParams& params) {
  if (name == "canonical-2d") return canonical_2d();
  if (name == "rigid-body") return rigid_body();
  if (name == "corrupted-demo") return corrupted_demo();
  if (name == "chm") return chm::real_chart_system(params.K, params.c);
  if (name == "polynomial") {
    if (params.file.empty())
      throw ConfigError("system 'polynomial' needs a system file");
    return load_polynomial_system(params.file);
  }
  throw UnknownSystem(fmt::format("unknown system '{}'", name));
}

}  // namespace metriplex
