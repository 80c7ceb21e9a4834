#include "metriplex/brackets.hpp"

#include <fmt/format.h>

#include <cmath>
#include <memory>
#include <random>

namespace metriplex::brackets {

Functional linear_functional(std::string name, Field phi) {
  auto p = std::make_shared<const Field>(std::move(phi));
  return {std::move(name),
          [p](const GridDistribution& f) {
            if (f.values.size() != p->size())
              throw std::invalid_argument("functional and distribution differ in size");
            double s = 0.0;
            for (std::size_t c = 0; c < p->size(); ++c) s += (*p)[c] * f.values[c];
            return s * f.grid.cell_volume();
          },
          [p](const GridDistribution&) { return *p; }};
}

Functional combine(double a, const Functional& F, double b,
                   const Functional& G) {
  return {fmt::format("{}*{}+{}*{}", a, F.name, b, G.name),
          [=](const GridDistribution& f) { return a * F.value(f) + b * G.value(f); },
          [=](const GridDistribution& f) {
            Field x = F.derivative(f);
            const Field y = G.derivative(f);
            for (std::size_t c = 0; c < x.size(); ++c) x[c] = a * x[c] + b * y[c];
            return x;
          }};
}

Functional product(const Functional& F, const Functional& G) {
  return {F.name + "*" + G.name,
          [=](const GridDistribution& f) { return F.value(f) * G.value(f); },
          [=](const GridDistribution& f) {
            const double fv = F.value(f), gv = G.value(f);
            Field x = F.derivative(f);
            const Field y = G.derivative(f);
            for (std::size_t c = 0; c < x.size(); ++c) x[c] = gv * x[c] + fv * y[c];
            return x;
          }};
}

ObservableSet observables(const fp::Discretization& disc, double alpha,
                          double beta, std::vector<double> mu) {
  if (mu.size() > disc.casimir_count())
    throw std::invalid_argument("more multipliers than declared Casimirs");
  ObservableSet o;
  o.alpha = alpha;
  o.beta = beta;
  o.mu = mu;
  const std::size_t cells = disc.cells();
  o.N = linear_functional("N", Field(cells, 1.0));
  o.E = linear_functional("E", disc.H());
  for (std::size_t k = 0; k < disc.casimir_count(); ++k)
    o.C.push_back(linear_functional(fmt::format("C{}", k + 1), disc.casimir(k)));
  o.S = {"S", [](const GridDistribution& f) { return fp::observable_S(f); },
         [](const GridDistribution& f) {
           Field d(f.values.size());
           for (std::size_t c = 0; c < d.size(); ++c)
             d[c] = -(std::log(std::max(f.values[c], fp::kLogFloor)) + 1.0);
           return d;
         }};
  // Copies of the per-cell samples keep the functional self-contained.
  auto H = std::make_shared<const Field>(disc.H());
  std::vector<Field> Cs;
  for (std::size_t k = 0; k < mu.size(); ++k) Cs.push_back(disc.casimir(k));
  auto C = std::make_shared<const std::vector<Field>>(std::move(Cs));
  const Functional S = o.S;
  o.Sigma = {"Sigma",
             [=](const GridDistribution& f) {
               double s = S.value(f) - alpha * f.mass();
               double e = 0.0;
               std::vector<double> ck(mu.size(), 0.0);
               for (std::size_t c = 0; c < f.values.size(); ++c) {
                 e += f.values[c] * (*H)[c];
                 for (std::size_t k = 0; k < mu.size(); ++k)
                   ck[k] += f.values[c] * (*C)[k][c];
               }
               const double dv = f.grid.cell_volume();
               s -= beta * e * dv;
               for (std::size_t k = 0; k < mu.size(); ++k) s -= mu[k] * ck[k] * dv;
               return s;
             },
             [=](const GridDistribution& f) {
               Field d = S.derivative(f);
               for (std::size_t c = 0; c < d.size(); ++c) {
                 d[c] -= alpha + beta * (*H)[c];
                 for (std::size_t k = 0; k < mu.size(); ++k) d[c] -= mu[k] * (*C)[k][c];
               }
               return d;
             }};
  return o;
}

namespace {

// sum dV a . M b with M = f J, or the dissipative mobility.
double bracket_quadrature(const Field& da, const Field& db,
                          const GridDistribution& f,
                          const fp::Discretization& disc, bool metric) {
  const int n = disc.dimension();
  std::vector<double> mob;
  if (metric) disc.mobility(f.values, mob);
  double s = 0.0;
  for (std::size_t c = 0; c < f.values.size(); ++c) {
    const double* M = metric ? &mob[c * n * n] : disc.J(c);
    const double wgt = metric ? 1.0 : f.values[c];
    double q = 0.0;
    for (int r = 0; r < n; ++r) {
      double mb = 0.0;
      for (int k = 0; k < n; ++k) mb += M[r * n + k] * db[c * n + k];
      q += da[c * n + r] * mb;
    }
    s += wgt * q;
  }
  return s * f.grid.cell_volume();
}

// sum dV nu L(f) (dA/h)(dB/h) over wall faces.
double wall_quadrature(const Field& A, const Field& B, const GridDistribution& f,
                       const fp::Discretization& disc) {
  const int n = disc.dimension();
  const auto& nu = disc.wall_viscosity();
  double s = 0.0;
  for (std::size_t c = 0; c < f.values.size(); ++c)
    for (int a = 0; a < n; ++a) {
      if (nu[c * n + a] == 0.0) continue;
      const std::size_t u = c + disc.grid().stride(a);
      const double h = disc.grid().axis(a).width();
      s += nu[c * n + a] * fp::logarithmic_mean(f.values[c], f.values[u]) *
           (A[u] - A[c]) * (B[u] - B[c]) / (h * h);
    }
  return s * f.grid.cell_volume();
}

Field grad(const fp::Discretization& disc, const Field& phi) {
  Field out;
  disc.stencil().gradient(phi, out);
  return out;
}

void check(const GridDistribution& f, const fp::Discretization& disc) {
  if (f.values.size() != disc.cells())
    throw std::invalid_argument("distribution does not match the discretization");
}

}  // namespace

double poisson_bracket_macro(const Functional& F, const Functional& G,
                             const GridDistribution& f,
                             const fp::Discretization& disc) {
  check(f, disc);
  return bracket_quadrature(grad(disc, F.derivative(f)),
                            grad(disc, G.derivative(f)), f, disc, false);
}

double dissipative_bracket_macro(const Functional& F, const Functional& G,
                                 const GridDistribution& f,
                                 const fp::Discretization& disc, double D) {
  if (!(D >= 0.0)) throw std::invalid_argument("D must be nonnegative");
  check(f, disc);
  if (D == 0.0) return 0.0;
  const Field a = F.derivative(f), b = G.derivative(f);
  return 0.5 * D * bracket_quadrature(grad(disc, a), grad(disc, b), f, disc, true) +
         wall_quadrature(a, b, f, disc);
}

namespace {

// D^T [ a f J DX + b M DY ] plus the wall faces when b > 0
Field adjoint_rhs(const GridDistribution& f, const fp::Discretization& disc,
                  double a, const Field& X, double b, const Field& Y) {
  const int n = disc.dimension();
  const Field dx = grad(disc, X), dy = grad(disc, Y);
  std::vector<double> mob;
  disc.mobility(f.values, mob);
  Field w(f.values.size() * n, 0.0);
  for (std::size_t c = 0; c < f.values.size(); ++c) {
    const double* J = disc.J(c);
    const double* M = &mob[c * n * n];
    for (int r = 0; r < n; ++r) {
      double p = 0.0, q = 0.0;
      for (int k = 0; k < n; ++k) {
        p += J[r * n + k] * dx[c * n + k];
        q += M[r * n + k] * dy[c * n + k];
      }
      w[c * n + r] = a * f.values[c] * p + b * q;
    }
  }
  Field out;
  disc.stencil().gradient_transpose(w, out);
  if (b > 0.0) {
    // Wall faces: flux nu L(f) dY/h, scattered as a divergence.
    const auto& nu = disc.wall_viscosity();
    for (std::size_t c = 0; c < f.values.size(); ++c)
      for (int ax = 0; ax < n; ++ax) {
        if (nu[c * n + ax] == 0.0) continue;
        const std::size_t u = c + disc.grid().stride(ax);
        const double h = disc.grid().axis(ax).width();
        const double F = nu[c * n + ax] *
                         fp::logarithmic_mean(f.values[c], f.values[u]) *
                         (Y[u] - Y[c]) / h;
        out[c] -= F / h;
        out[u] += F / h;
      }
  }
  return out;
}

}  // namespace

Field metriplectic_rhs(const GridDistribution& f, const fp::Discretization& disc,
                       double D, const ObservableSet& obs) {
  check(f, disc);
  return adjoint_rhs(f, disc, 1.0, obs.E.derivative(f), 0.5 * D,
                     obs.Sigma.derivative(f));
}

Field single_generator_rhs(const GridDistribution& f,
                           const fp::Discretization& disc, double D,
                           const ObservableSet& obs) {
  check(f, disc);
  if (obs.beta == 0.0)
    throw std::invalid_argument("single-generator form needs beta != 0");
  const Field s = obs.Sigma.derivative(f);
  return adjoint_rhs(f, disc, -1.0 / obs.beta, s, 0.5 * D, s);
}

bool AxiomReport::passed() const {
  for (const auto& r : results)
    if (!r.passed()) return false;
  return true;
}

nlohmann::json AxiomReport::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : results)
    j.push_back({{"axiom", r.name},
                 {"description", r.description},
                 {"violation", r.violation},
                 {"threshold", r.threshold},
                 {"passed", r.passed()}});
  return j;
}

namespace {

double rel(double lhs, double rhs) {
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs) + std::abs(rhs));
}

// {G,H} of two linear functionals is linear with derivative DG'.J DH'.
Functional linear_bracket(const Functional& G, const Functional& H,
                          const GridDistribution& any,
                          const fp::Discretization& disc) {
  const int n = disc.dimension();
  const Field dg = grad(disc, G.derivative(any));
  const Field dh = grad(disc, H.derivative(any));
  Field phi(disc.cells(), 0.0);
  for (std::size_t c = 0; c < phi.size(); ++c) {
    const double* J = disc.J(c);
    double q = 0.0;
    for (int r = 0; r < n; ++r)
      for (int k = 0; k < n; ++k) q += dg[c * n + r] * J[r * n + k] * dh[c * n + k];
    phi[c] = q;
  }
  return linear_functional("{" + G.name + "," + H.name + "}", std::move(phi));
}

}  // namespace

AxiomReport axiom_suite(const fp::Discretization& disc, double D,
                        const std::vector<GridDistribution>& fs,
                        const std::vector<Functional>& Fs,
                        std::uint64_t seed) {
  if (fs.size() < 3)
    throw std::invalid_argument("axiom suite needs at least 3 distributions");
  if (Fs.size() < 4)
    throw std::invalid_argument("axiom suite needs at least 4 functionals");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  double p1 = 0, p2 = 0, p3 = 0, p4 = 0, p5 = 0;
  double d1 = 0, d2 = 0, d3 = 0, d4 = 0;
  auto pb = [&](const Functional& a, const Functional& b,
                const GridDistribution& f) {
    return poisson_bracket_macro(a, b, f, disc);
  };
  auto db = [&](const Functional& a, const Functional& b,
                const GridDistribution& f) {
    return dissipative_bracket_macro(a, b, f, disc, D);
  };
  const std::size_t m = Fs.size();
  for (const auto& f : fs) {
    for (std::size_t i = 0; i < m; ++i) {
      const Functional& F = Fs[i];
      p2 = std::max(p2, rel(pb(F, F, f), 0.0));
      d2 = std::max(d2, std::max(0.0, -db(F, F, f)));
      for (std::size_t j = 0; j < m; ++j) {
        const Functional& G = Fs[j];
        p3 = std::max(p3, rel(pb(F, G, f), -pb(G, F, f)));
        d3 = std::max(d3, rel(db(F, G, f), db(G, F, f)));
        const Functional& H = Fs[(i + j + 1) % m];
        const double a = coef(rng), b = coef(rng);
        const Functional lin = combine(a, F, b, G);
        p1 = std::max(p1, rel(pb(lin, H, f), a * pb(F, H, f) + b * pb(G, H, f)));
        p1 = std::max(p1, rel(pb(H, lin, f), a * pb(H, F, f) + b * pb(H, G, f)));
        d1 = std::max(d1, rel(db(lin, H, f), a * db(F, H, f) + b * db(G, H, f)));
        d1 = std::max(d1, rel(db(H, lin, f), a * db(H, F, f) + b * db(H, G, f)));
        const Functional FG = product(F, G);
        const double Fv = F.value(f), Gv = G.value(f);
        p4 = std::max(p4, rel(pb(FG, H, f), Fv * pb(G, H, f) + pb(F, H, f) * Gv));
        d4 = std::max(d4, rel(db(FG, H, f), Fv * db(G, H, f) + db(F, H, f) * Gv));
      }
    }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        for (std::size_t k = j + 1; k < m; ++k) {
          const Functional &F = Fs[i], &G = Fs[j], &H = Fs[k];
          const double t1 = pb(F, linear_bracket(G, H, f, disc), f);
          const double t2 = pb(G, linear_bracket(H, F, f, disc), f);
          const double t3 = pb(H, linear_bracket(F, G, f, disc), f);
          const double scale =
              std::max(1.0, std::abs(t1) + std::abs(t2) + std::abs(t3));
          p5 = std::max(p5, std::abs(t1 + t2 + t3) / scale);
        }
  }
  AxiomReport rep;
  rep.results = {
      {"P1", "Poisson bilinearity", p1, 1e-10},
      {"P2", "Poisson alternativity {F,F} = 0", p2, 1e-10},
      {"P3", "Poisson antisymmetry", p3, 1e-10},
      {"P4", "Poisson Leibniz rule", p4, 1e-12},
      {"P5", "Poisson Jacobi identity (linear functionals)", p5, 1e-8},
      {"D1", "dissipative bilinearity", d1, 1e-10},
      {"D2", "dissipative non-negativity [F,F] >= 0", d2, 1e-14},
      {"D3", "dissipative symmetry", d3, 1e-10},
      {"D4", "dissipative Leibniz rule", d4, 1e-12},
  };
  return rep;
}

}  // namespace metriplex::brackets
