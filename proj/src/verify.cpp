#include "metriplex/verify.hpp"

#include "metriplex/chm.hpp"

#include <fmt/format.h>

#include <cmath>
#include <memory>
#include <random>

namespace metriplex {

namespace {

using nlohmann::json;

struct Check {
  std::string name;
  double max = 0.0;
  double threshold = 0.0;
  std::string note;
  bool gated = true;

  Check(std::string n, double m, double t, std::string nt = "", bool g = true)
      : name(std::move(n)), max(m), threshold(t), note(std::move(nt)), gated(g) {}

  void update(double v) {
    if (std::isnan(v)) max = v;
    else if (!std::isnan(max)) max = std::max(max, v);
  }
  bool passed() const { return !gated || (!std::isnan(max) && max <= threshold); }
  json to_json() const {
    json j = {{"name", name}, {"max", max}, {"passed", passed()}};
    if (gated) j["threshold"] = threshold;
    else j["informational"] = true;
    if (!note.empty()) j["note"] = note;
    return j;
  }
};

bool constant_operator(const HamiltonianSystem& sys, const Vector& x) {
  for (const Matrix& p : sys.op.partials(x))
    if (p.cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

double rel_diff(const Vector& a, const Vector& b) {
  const double scale = std::max(1.0, std::max(a.cwiseAbs().maxCoeff(),
                                              b.cwiseAbs().maxCoeff()));
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

HamiltonianSystem symmetrized(const HamiltonianSystem& sys) {
  const PoissonOperatorField base = sys.op;
  const int n = sys.dimension();
  return with_operator(
      sys,
      PoissonOperatorField(n,
                           [base, n](const Vector& x, Matrix& out) {
                             base.evaluate(x, out);
                             for (int i = 0; i < n; ++i)
                               for (int j = i + 1; j < n; ++j) out(j, i) = out(i, j);
                           }),
      sys.name + "-symmetrized");
}

brackets::AxiomReport verify_brackets(const HamiltonianSystem& sys,
                                      const BracketVerifyOptions& o) {
  const int n = sys.dimension();
  if (n > 3)
    throw ConfigError("the grid axiom suite supports dimension <= 3");
  std::vector<Axis> axes(n, Axis{-o.half_width, o.half_width, o.cells});
  const fp::Discretization disc(sys, PhaseGrid(axes));
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<GridDistribution> fs;
  for (int k = 0; k < o.distributions; ++k) {
    Vector mean(n), sd(n);
    for (int a = 0; a < n; ++a) {
      mean[a] = 0.15 * o.half_width * unif(rng);
      sd[a] = o.half_width * (0.08 + 0.02 * (unif(rng) + 1.0));
    }
    fs.push_back(fp::gaussian(disc.grid(), mean, sd));
  }
  // Quadratic test fields keep the Jacobi check exact for constant
  // operators; state-dependent operators use affine fields.
  const int degree = constant_operator(sys, Vector::Zero(n)) ? 2 : 1;
  std::vector<brackets::Functional> Fs;
  Vector x;
  for (int k = 0; k < o.functionals; ++k) {
    Vector lin(n);
    Matrix quad = Matrix::Zero(n, n);
    const double c0 = unif(rng);
    for (int a = 0; a < n; ++a) lin[a] = unif(rng);
    if (degree == 2)
      for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) quad(a, b) = 0.5 * unif(rng);
    std::vector<double> phi(disc.cells());
    for (std::size_t c = 0; c < disc.cells(); ++c) {
      disc.grid().center(c, x);
      phi[c] = c0 + lin.dot(x) + x.dot(quad * x);
    }
    Fs.push_back(brackets::linear_functional(fmt::format("F{}", k), std::move(phi)));
  }
  return brackets::axiom_suite(disc, o.D, fs, Fs, o.seed + 1);
}

namespace {

json verify_impl(const HamiltonianSystem& sys, const VerifyOptions& options,
                 const SystemParams* chm_info) {
  const int n = sys.dimension();
  const bool is_chm = chm_info != nullptr;
  const int K = is_chm ? chm_info->K : 0;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;

  const bool analytic = sys.op.has_analytic_partials();
  Check anti{"antisymmetry", 0, 1e-14};
  Check jac{"jacobi", 0, analytic ? 1e-8 : 1e-5,
            analytic ? "analytic partials" : "finite-difference partials"};
  Check jac_chart{"jacobi_real_chart_all_triads", 0, 0,
                  "includes boundary triads of the truncation", false};
  std::vector<Check> cas;
  for (const auto& c : sys.casimirs)
    cas.emplace_back("casimir:" + c.name(), 0, 1e-12);
  Check div{"divergence", 0, 1e-12};
  Check metric{"metric_consistency", 0, 1e-14,
               "J J^T against the explicit sum over k"};
  Check kernel{"metric_casimir_kernel", 0, 1e-10, "|g grad C|"};
  Check grad{"gradient_consistency", 0, 1e-6,
             "analytic gradients against centred differences (relative)"};
  Check energy{"energy_conservation_rk4", 0, is_chm ? 1e-6 : 1e-8,
               "unit time at dt = 1e-3, relative"};
  int rank_min = n, rank_max = 0, ambiguous = 0, odd = 0;
  Check cjac{"jacobi_interior_triads", 0, 1e-10};
  Check cjac_b{"jacobi_boundary_triads", 0, 0, "reported only", false};
  Check dual{"rhs_dual_path", 0, 1e-12, "convolution against J grad H"};
  Check liou{"liouville_trace", 0, 1e-8};
  Check reality{"reality", 0, 1e-13};

  std::unique_ptr<chm::CHMOperator> chmop;
  const double c_param = is_chm ? chm_info->c : 0.0;
  if (is_chm) chmop = std::make_unique<chm::CHMOperator>(K, c_param);

  std::vector<Vector> pts;
  for (int p = 0; p < options.points; ++p) {
    if (is_chm) {
      pts.push_back(chm::random_state(K, c_param, rng, 1.0).to_real());
    } else {
      Vector x(n);
      for (int i = 0; i < n; ++i) x[i] = normal(rng);
      pts.push_back(x);
    }
  }

  for (const Vector& x : pts) {
    const Matrix j = sys.op(x);
    anti.update(antisymmetry_violation(j));
    const double jr = jacobi_residual(sys, x);
    if (is_chm) jac_chart.update(jr);
    else jac.update(jr);
    for (std::size_t k = 0; k < sys.casimirs.size(); ++k)
      cas[k].update(casimir_residual(sys, k, x).cwiseAbs().maxCoeff());
    div.update(divergence_residual(sys, x).cwiseAbs().maxCoeff());
    Matrix explicit_sum = Matrix::Zero(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int k = 0; k < n; ++k) explicit_sum(a, b) += j(a, k) * j(b, k);
    const Matrix g = metric_tensor(sys, x);
    metric.update((g - explicit_sum).cwiseAbs().maxCoeff());
    for (const auto& c : sys.casimirs)
      kernel.update((g * c.gradient(x)).cwiseAbs().maxCoeff());
    if (sys.hamiltonian.has_analytic_gradient())
      grad.update(rel_diff(sys.hamiltonian.gradient(x),
                           sys.hamiltonian.fd_gradient(x)));
    for (const auto& c : sys.casimirs)
      if (c.has_analytic_gradient())
        grad.update(rel_diff(c.gradient(x), c.fd_gradient(x)));
    const RankReport rr = operator_rank(sys, x);
    rank_min = std::min(rank_min, rr.rank);
    rank_max = std::max(rank_max, rr.rank);
    ambiguous += rr.ambiguous;
    odd += !rr.even;
    if (is_chm) {
      const chm::SpectralState s = chm::SpectralState::from_real(K, c_param, x);
      const auto rep = chmop->jacobi(s.coeffs());
      cjac.update(rep.interior);
      cjac_b.update(rep.boundary);
      const auto a = chm::rhs_deterministic(s);
      const auto b = chm::rhs_operator(s);
      double d = 0.0, sc = 1.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a[i] - b[i]));
        sc = std::max(sc, std::abs(a[i]));
      }
      dual.update(d / sc);
      liou.update(std::abs(chm::liouville_trace(s)));
      reality.update(s.reality_violation());
    }
  }
  const int energy_points = std::min<int>(5, static_cast<int>(pts.size()));
  for (int p = 0; p < energy_points; ++p) {
    const double h0 = sys.hamiltonian(pts[p]);
    const Vector x1 = integrate_hamiltonian_rk4(sys, pts[p], 1e-3, 1000);
    energy.update(std::abs(sys.hamiltonian(x1) - h0) / std::max(std::abs(h0), 1e-300));
  }

  std::vector<Check> checks = {anti};
  if (is_chm) {
    checks.push_back(cjac);
    checks.push_back(cjac_b);
    checks.push_back(jac_chart);
  } else {
    checks.push_back(jac);
  }
  for (const auto& c : cas) checks.push_back(c);
  checks.push_back(div);
  checks.push_back(metric);
  if (!sys.casimirs.empty()) checks.push_back(kernel);
  checks.push_back(grad);
  checks.push_back(energy);
  if (is_chm) {
    checks.push_back(dual);
    checks.push_back(liou);
    checks.push_back(reality);
  }

  json rep;
  rep["system"] = sys.name;
  rep["dimension"] = n;
  rep["points"] = options.points;
  rep["seed"] = options.seed;
  bool ok = true;
  for (const auto& c : checks) {
    rep["checks"].push_back(c.to_json());
    ok = ok && c.passed();
  }
  rep["rank"] = {{"min", rank_min},
                 {"max", rank_max},
                 {"ambiguous_points", ambiguous},
                 {"odd_rank_points", odd}};
  if (options.axioms && n <= 3) {
    BracketVerifyOptions bo;
    bo.seed = options.seed;
    if (n == 3) {
      bo.cells = 16;
      bo.half_width = 2.5;
    }
    const auto ax = verify_brackets(sys, bo);
    rep["axioms"] = ax.to_json();
    ok = ok && ax.passed();
  } else if (options.axioms) {
    rep["axioms_skipped"] = "grid axiom suite needs dimension <= 3";
  }
  rep["passed"] = ok;
  return rep;
}

}  // namespace

json verify_system(const HamiltonianSystem& sys, const VerifyOptions& options) {
  return verify_impl(sys, options, nullptr);
}

json verify_system(const std::string& name, const SystemParams& params,
                   const VerifyOptions& options) {
  const HamiltonianSystem sys = make_system(name, params);
  if (name != "chm") return verify_impl(sys, options, nullptr);
  json rep = verify_impl(sys, options, &params);
  rep["K"] = params.K;
  rep["c"] = params.c;
  return rep;
}

}  // namespace metriplex
