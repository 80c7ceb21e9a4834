#include "metriplex/fokker_planck.hpp"

#include "metriplex/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace metriplex::fp {

namespace {

// Row r of the 1-D operator (units of 1/(2h)) as (column, weight) pairs.
// Boundary rows average the interior face difference with the zero wall
// flux, so every row has two points.
int stencil_row(int r, int N, int* col, double* w) {
  col[0] = std::max(r - 1, 0);
  col[1] = std::min(r + 1, N - 1);
  w[0] = -1.0;
  w[1] = 1.0;
  return 2;
}

double operator_norm_1d(int N, double h) {
  Matrix d = Matrix::Zero(N, N);
  int col[3];
  double w[3];
  for (int r = 0; r < N; ++r) {
    const int k = stencil_row(r, N, col, w);
    for (int i = 0; i < k; ++i) d(r, col[i]) = w[i] / (2.0 * h);
  }
  Eigen::JacobiSVD<Matrix> svd(d);
  return svd.singularValues()[0];
}

}  // namespace

double logarithmic_mean(double a, double b) {
  if (a < kLogFloor || b < kLogFloor) return 0.0;
  const double d = std::log(b) - std::log(a);
  if (std::abs(d) < 1e-3) return a * (1.0 + d * (0.5 + d * (1.0 / 6.0 + d / 24.0)));
  return (b - a) / d;
}

Stencil::Stencil(PhaseGrid grid) : grid_(std::move(grid)) {
  for (int a = 0; a < grid_.dimension(); ++a)
    norms_.push_back(operator_norm_1d(grid_.axis(a).cells, grid_.axis(a).width()));
}

void Stencil::gradient(const std::vector<double>& phi,
                       std::vector<double>& out) const {
  const int n = grid_.dimension();
  const std::size_t cells = grid_.size();
  out.resize(cells * n);
  parallel_for(cells, [&](std::size_t lo, std::size_t hi) {
    int col[3];
    double w[3];
    for (std::size_t c = lo; c < hi; ++c)
      for (int a = 0; a < n; ++a) {
        const int N = grid_.axis(a).cells;
        const int i = grid_.coordinate(c, a);
        const std::size_t s = grid_.stride(a);
        const std::size_t base = c - static_cast<std::size_t>(i) * s;
        const int k = stencil_row(i, N, col, w);
        double acc = 0.0;
        for (int t = 0; t < k; ++t) acc += w[t] * phi[base + col[t] * s];
        out[c * n + a] = acc / (2.0 * grid_.axis(a).width());
      }
  });
}

void Stencil::gradient_transpose(const std::vector<double>& wv,
                                 std::vector<double>& out) const {
  const int n = grid_.dimension();
  const std::size_t cells = grid_.size();
  out.assign(cells, 0.0);
  int col[3];
  double w[3];
  for (std::size_t c = 0; c < cells; ++c)
    for (int a = 0; a < n; ++a) {
      const int N = grid_.axis(a).cells;
      const int i = grid_.coordinate(c, a);
      const std::size_t s = grid_.stride(a);
      const std::size_t base = c - static_cast<std::size_t>(i) * s;
      const int k = stencil_row(i, N, col, w);
      const double scale = wv[c * n + a] / (2.0 * grid_.axis(a).width());
      for (int t = 0; t < k; ++t) out[base + col[t] * s] += w[t] * scale;
    }
}

void Stencil::log_mean(const std::vector<double>& f,
                       std::vector<double>& out) const {
  const int n = grid_.dimension();
  const std::size_t cells = grid_.size();
  out.resize(cells * n);
  parallel_for(cells, [&](std::size_t lo, std::size_t hi) {
    int col[3];
    double w[3];
    for (std::size_t c = lo; c < hi; ++c)
      for (int a = 0; a < n; ++a) {
        const int i = grid_.coordinate(c, a);
        const std::size_t s = grid_.stride(a);
        const std::size_t base = c - static_cast<std::size_t>(i) * s;
        const int k = stencil_row(i, grid_.axis(a).cells, col, w);
        double lo_v = f[base + col[0] * s], hi_v = lo_v;
        for (int t = 1; t < k; ++t) {
          lo_v = std::min(lo_v, f[base + col[t] * s]);
          hi_v = std::max(hi_v, f[base + col[t] * s]);
        }
        out[c * n + a] = logarithmic_mean(lo_v, hi_v);
      }
  });
}

std::size_t FluxField::face_index(int a, std::size_t cell, int face) const {
  // Strip the coordinate along a, then re-insert it with the longer axis.
  const std::size_t s = grid.stride(a);
  const std::size_t outer = cell / (s * grid.axis(a).cells);
  const std::size_t inner = cell % s;
  return (outer * (grid.axis(a).cells + 1) + face) * s + inner;
}

double FluxField::boundary_max() const {
  double worst = 0.0;
  for (int a = 0; a < grid.dimension(); ++a) {
    const int N = grid.axis(a).cells;
    for (std::size_t c = 0; c < grid.size(); ++c) {
      if (grid.coordinate(c, a) != 0) continue;
      worst = std::max(worst, std::abs(faces[a][face_index(a, c, 0)]));
      worst = std::max(worst, std::abs(faces[a][face_index(a, c, N)]));
    }
  }
  return worst;
}

std::vector<double> FluxField::divergence() const {
  std::vector<double> out(grid.size(), 0.0);
  for (int a = 0; a < grid.dimension(); ++a) {
    const double h = grid.axis(a).width();
    for (std::size_t c = 0; c < grid.size(); ++c) {
      const int i = grid.coordinate(c, a);
      out[c] -= (faces[a][face_index(a, c, i + 1)] -
                 faces[a][face_index(a, c, i)]) / h;
    }
  }
  return out;
}

FluxField flux_from_cell_field(const PhaseGrid& grid,
                               const std::vector<double>& w) {
  const int n = grid.dimension();
  FluxField ff{grid, {}};
  ff.faces.resize(n);
  for (int a = 0; a < n; ++a) {
    const int N = grid.axis(a).cells;
    const std::size_t s = grid.stride(a);
    ff.faces[a].assign(grid.size() / N * (N + 1), 0.0);
    for (std::size_t c = 0; c < grid.size(); ++c) {
      if (grid.coordinate(c, a) != 0) continue;
      for (int k = 0; k <= N - 2; ++k)
        ff.faces[a][ff.face_index(a, c, k + 1)] =
            0.5 * (w[(c + k * s) * n + a] + w[(c + (k + 1) * s) * n + a]);
    }
  }
  return ff;
}

Discretization::Discretization(HamiltonianSystem sys, PhaseGrid grid)
    : sys_(std::move(sys)), stencil_(std::move(grid)), n_(sys_.dimension()) {
  const PhaseGrid& gr = stencil_.grid();
  if (gr.dimension() != n_)
    throw ConfigError(fmt::format(
        "grid has {} axes but system '{}' has dimension {}", gr.dimension(),
        sys_.name, n_));
  const std::size_t cells = gr.size();
  J_.resize(cells * n_ * n_);
  g_.resize(cells * n_ * n_);
  H_.resize(cells);
  logJ_.resize(cells);
  C_.assign(sys_.casimirs.size(), std::vector<double>(cells));
  Vector x;
  Matrix j;
  for (std::size_t c = 0; c < cells; ++c) {
    gr.center(c, x);
    sys_.op.evaluate(x, j);
    const Matrix g = j * j.transpose();
    for (int r = 0; r < n_; ++r)
      for (int q = 0; q < n_; ++q) {
        J_[(c * n_ + r) * n_ + q] = j(r, q);
        g_[(c * n_ + r) * n_ + q] = g(r, q);
      }
    g_max_ = std::max(g_max_, g.cwiseAbs().rowwise().sum().maxCoeff());
    for (int r = 0; r < n_; ++r)
      for (int q = 0; q < n_; ++q)
        if (r != q && g(r, q) != 0.0) diagonal_metric_ = false;
    H_[c] = sys_.hamiltonian(x);
    for (std::size_t k = 0; k < C_.size(); ++k) C_[k][c] = sys_.casimirs[k](x);
    const double m = sys_.measure(x);
    if (!(m > 0.0)) throw NumericalError("measure density must be positive");
    logJ_[c] = std::log(m);
  }
  stencil_.gradient(H_, DH_);
  v_.assign(cells * n_, 0.0);
  gDH_.assign(cells * n_, 0.0);
  for (std::size_t c = 0; c < cells; ++c)
    for (int r = 0; r < n_; ++r)
      for (int q = 0; q < n_; ++q) {
        v_[c * n_ + r] += J_[(c * n_ + r) * n_ + q] * DH_[c * n_ + q];
        gDH_[c * n_ + r] += g_[(c * n_ + r) * n_ + q] * DH_[c * n_ + q];
      }
  // Box walls cut across the Hamiltonian flow.  Where that flow meets a wall
  // the pile-up layer is thinner than a cell, so the outermost layers get
  // enough face dissipation to keep the cell Peclet number at 2.
  std::vector<double> speed(cells, 0.0);
  std::vector<char> near(cells, 0);
  for (std::size_t c = 0; c < cells; ++c)
    for (int a = 0; a < n_; ++a) {
      speed[c] = std::max(speed[c], std::abs(v_[c * n_ + a]));
      const int i = gr.coordinate(c, a);
      if (i < kWallLayer || i >= gr.axis(a).cells - kWallLayer) near[c] = 1;
    }
  nu_.assign(cells * n_, 0.0);
  nu_max_.assign(n_, 0.0);
  for (std::size_t c = 0; c < cells; ++c)
    for (int a = 0; a < n_; ++a) {
      if (gr.coordinate(c, a) == gr.axis(a).cells - 1) continue;
      const std::size_t u = c + gr.stride(a);
      if (!near[c] && !near[u]) continue;
      const double nu = 0.5 * gr.axis(a).width() * std::max(speed[c], speed[u]);
      nu_[c * n_ + a] = nu;
      nu_max_[a] = std::max(nu_max_[a], nu);
      const double h = gr.axis(a).width();
      wall_faces_.push_back({c, u, nu, h, (H_[u] - H_[c]) / h});
    }
}

void Discretization::mobility(const std::vector<double>& f,
                              std::vector<double>& out) const {
  std::vector<double> m;
  stencil_.log_mean(f, m);
  const std::size_t cells = f.size();
  out.resize(cells * n_ * n_);
  for (std::size_t c = 0; c < cells; ++c) {
    double mc = m[c * n_];
    for (int a = 1; a < n_; ++a) mc = std::min(mc, m[c * n_ + a]);
    for (int r = 0; r < n_; ++r)
      for (int q = 0; q < n_; ++q) {
        const double w = diagonal_metric_ ? m[c * n_ + r] : mc;
        out[(c * n_ + r) * n_ + q] = w * g_[(c * n_ + r) * n_ + q];
      }
  }
}

BetaSetting BetaSetting::parse(const std::string& text) {
  if (text == "adaptive") return adapt();
  const std::string prefix = "fixed:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string rest = text.substr(prefix.size());
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == rest.size() && used > 0 && std::isfinite(v)) return fixed(v);
  }
  throw ConfigError(fmt::format(
      "beta_mode '{}' must be 'adaptive' or 'fixed:<value>'", text));
}

std::string BetaSetting::str() const {
  return adaptive ? std::string("adaptive") : fmt::format("fixed:{}", value);
}

Solver::Solver(HamiltonianSystem sys, PhaseGrid grid, double D)
    : disc_(std::move(sys), std::move(grid)), D_(D) {
  if (!(D >= 0.0) || !std::isfinite(D))
    throw ConfigError("D must be finite and nonnegative");
}

namespace {

void log_field(const std::vector<double>& f, std::vector<double>& out) {
  out.resize(f.size());
  for (std::size_t c = 0; c < f.size(); ++c)
    out[c] = std::log(std::max(f[c], kLogFloor));
}

// Sum over cells of a . M b with M a per-cell n x n block.
double block_quadratic(int n, const std::vector<double>& M,
                       const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  const std::size_t cells = a.size() / n;
  for (std::size_t c = 0; c < cells; ++c)
    for (int r = 0; r < n; ++r) {
      double mb = 0.0;
      for (int k = 0; k < n; ++k) mb += M[(c * n + r) * n + k] * b[c * n + k];
      s += a[c * n + r] * mb;
    }
  return s;
}

// Logarithmic mean from values and their logs.
inline double log_mean_with(double a, double b, double la, double lb) {
  if (a < kLogFloor || b < kLogFloor) return 0.0;
  const double d = lb - la;
  if (std::abs(d) < 1e-3) return a * (1.0 + d * (0.5 + d * (1.0 / 6.0 + d / 24.0)));
  return (b - a) / d;
}

}  // namespace

void Solver::parts(const std::vector<double>& f, Parts& out) const {
  const int n = disc_.dimension();
  const PhaseGrid& gr = grid();
  const std::size_t cells = f.size();
  log_field(f, out.lf);
  out.P.resize(cells * n);
  out.Q.resize(cells * n);
  const auto& lf = out.lf;
  const auto& dh = disc_.DH();
  const bool diagonal = disc_.diagonal_metric();
  parallel_for(cells, [&](std::size_t lo_c, std::size_t hi_c) {
    double s[3], df[3], dl[3];
    for (std::size_t c = lo_c; c < hi_c; ++c) {
      for (int a = 0; a < n; ++a) {
        const int i = gr.coordinate(c, a);
        const int N = gr.axis(a).cells;
        const std::size_t st = gr.stride(a);
        const std::size_t lo = i > 0 ? c - st : c;
        const std::size_t hi = i < N - 1 ? c + st : c;
        const double inv = 0.5 / gr.axis(a).width();
        df[a] = (f[hi] - f[lo]) * inv;
        dl[a] = (lf[hi] - lf[lo]) * inv;
        s[a] = log_mean_with(f[lo], f[hi], lf[lo], lf[hi]);
      }
      const double* g = disc_.g(c);
      if (diagonal) {
        // m_r D_r log f = D_r f on two-point rows, also where f <= 0.
        for (int r = 0; r < n; ++r) {
          out.P[c * n + r] = g[r * n + r] * df[r];
          out.Q[c * n + r] = s[r] * g[r * n + r] * dh[c * n + r];
        }
      } else {
        double mc = s[0];
        for (int a = 1; a < n; ++a) mc = std::min(mc, s[a]);
        for (int r = 0; r < n; ++r) {
          double p = 0.0, q = 0.0;
          for (int k = 0; k < n; ++k) {
            p += g[r * n + k] * dl[k];
            q += g[r * n + k] * dh[c * n + k];
          }
          out.P[c * n + r] = mc * p;
          out.Q[c * n + r] = mc * q;
        }
      }
    }
  });
}

double Solver::beta_from(const std::vector<double>& f, const Parts& p,
                         bool wall) const {
  const auto& dh = disc_.DH();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < p.P.size(); ++i) {
    num += dh[i] * p.P[i];
    den += dh[i] * p.Q[i];
  }
  const double dv = grid().cell_volume();
  if (!(den * dv > 1e-14))
    throw DegenerateDenominator(fmt::format(
        "beta denominator quadrature {:.3e} is not above 1e-14", den * dv));
  if (wall && D_ > 0.0) {
    // Energy balance over both dissipative parts.
    num *= 0.5 * D_;
    den *= 0.5 * D_;
    for (const auto& wf : disc_.wall_faces()) {
      const double a = f[wf.lower], b = f[wf.upper];
      num += wf.nu * wf.dH * (b - a) / wf.h;
      den += wf.nu * log_mean_with(a, b, p.lf[wf.lower], p.lf[wf.upper]) * wf.dH * wf.dH;
    }
  }
  return -num / den;
}

void Solver::rhs_from(const std::vector<double>& f, double beta, const Parts& p,
                      std::vector<double>& out) const {
  const int n = disc_.dimension();
  const PhaseGrid& gr = grid();
  const std::size_t cells = f.size();
  const double half_d = 0.5 * D_;
  const auto& v = disc_.velocity();
  std::vector<double> w(cells * n);
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = f[i / n] * v[i] - half_d * (p.P[i] + beta * p.Q[i]);
  out.assign(cells, 0.0);
  // Gather form of D^T w: row r reads columns max(r-1,0) and min(r+1,N-1).
  parallel_for(cells, [&](std::size_t lo_c, std::size_t hi_c) {
    for (std::size_t c = lo_c; c < hi_c; ++c) {
      double acc = 0.0;
      for (int a = 0; a < n; ++a) {
        const int i = gr.coordinate(c, a);
        const int N = gr.axis(a).cells;
        const std::size_t st = gr.stride(a);
        double t = 0.0;
        if (i + 1 <= N - 1) t -= w[(c + st) * n + a];
        if (i == 0) t -= w[c * n + a];
        if (i >= 1) t += w[(c - st) * n + a];
        if (i == N - 1) t += w[c * n + a];
        acc += t * (0.5 / gr.axis(a).width());
      }
      out[c] = acc;
    }
  });
  if (D_ > 0.0)
    for (const auto& wf : disc_.wall_faces()) {
      const double a = f[wf.lower], b = f[wf.upper];
      const double L = log_mean_with(a, b, p.lf[wf.lower], p.lf[wf.upper]);
      const double F = -wf.nu * ((b - a) / wf.h + beta * L * wf.dH);
      out[wf.lower] -= F / wf.h;
      out[wf.upper] += F / wf.h;
    }
}

void Solver::cell_flux(const GridDistribution& f, double beta,
                       std::vector<double>& w) const {
  const int n = disc_.dimension();
  Parts p;
  parts(f.values, p);
  w.resize(f.values.size() * n);
  const auto& v = disc_.velocity();
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = f.values[i / n] * v[i] - 0.5 * D_ * (p.P[i] + beta * p.Q[i]);
}

FluxField Solver::flux(const GridDistribution& f, double beta) const {
  std::vector<double> w;
  cell_flux(f, beta, w);
  FluxField ff = flux_from_cell_field(grid(), w);
  if (D_ > 0.0) {
    const auto& fv = f.values;
    for (const auto& wf : disc_.wall_faces()) {
      int a = 0;
      while (grid().stride(a) != wf.upper - wf.lower) ++a;
      const int i = grid().coordinate(wf.lower, a);
      ff.faces[a][ff.face_index(a, wf.lower, i + 1)] -=
          wf.nu * ((fv[wf.upper] - fv[wf.lower]) / wf.h +
                   beta * logarithmic_mean(fv[wf.lower], fv[wf.upper]) * wf.dH);
    }
  }
  return ff;
}

std::vector<double> Solver::fpe_rhs(const GridDistribution& f,
                                    double beta) const {
  if (f.values.size() != grid().size())
    throw std::invalid_argument("distribution does not match the solver grid");
  if (!std::isfinite(beta)) throw std::invalid_argument("beta must be finite");
  Parts p;
  parts(f.values, p);
  std::vector<double> out;
  rhs_from(f.values, beta, p, out);
  return out;
}

double Solver::compute_beta(const GridDistribution& f) const {
  Parts p;
  parts(f.values, p);
  return beta_from(f.values, p, false);
}

double Solver::adaptive_beta(const GridDistribution& f) const {
  Parts p;
  parts(f.values, p);
  return beta_from(f.values, p, true);
}

double Solver::entropy_production(const GridDistribution& f,
                                  double beta) const {
  if (D_ == 0.0) return 0.0;
  const int n = disc_.dimension();
  std::vector<double> lf, u, M;
  log_field(f.values, lf);
  disc_.stencil().gradient(lf, u);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] += beta * disc_.DH()[i];
  disc_.mobility(f.values, M);
  double s = 0.5 * D_ * block_quadratic(n, M, u, u);
  for (const auto& wf : disc_.wall_faces()) {
    const double du = (lf[wf.upper] - lf[wf.lower]) / wf.h + beta * wf.dH;
    s += wf.nu * logarithmic_mean(f.values[wf.lower], f.values[wf.upper]) * du * du;
  }
  return s * grid().cell_volume();
}

double Solver::stability_bound(double beta) const {
  const int n = disc_.dimension();
  double lam = 0.0;
  for (int a = 0; a < n; ++a) {
    double vmax = 0.0;
    for (std::size_t c = 0; c < grid().size(); ++c)
      vmax = std::max(vmax, std::abs(disc_.velocity()[c * n + a] -
                                     0.5 * D_ * beta * disc_.gDH()[c * n + a]));
    const double na = disc_.stencil().norm(a);
    lam += 0.5 * D_ * disc_.g_max() * na * na + vmax * na;
    if (D_ > 0.0) {
      const double h = grid().axis(a).width();
      lam += 4.0 * disc_.wall_viscosity_max(a) / (h * h);
    }
  }
  return lam > 0.0 ? 1.0 / lam : std::numeric_limits<double>::infinity();
}

void Solver::stage(const std::vector<double>& f, const BetaSetting& mode,
                   std::vector<double>& out) const {
  Parts p;
  parts(f, p);
  const double beta = mode.adaptive ? beta_from(f, p, true) : mode.value;
  rhs_from(f, beta, p, out);
}

GridDistribution Solver::step(const GridDistribution& f, double dt,
                              const BetaSetting& mode) const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const double beta = mode.adaptive ? adaptive_beta(f) : mode.value;
  const double bound = stability_bound(beta);
  if (dt > bound)
    throw StabilityError(
        fmt::format("dt = {:g} exceeds the stability bound {:g}; use dt <= {:g}",
                    dt, bound, 0.9 * bound),
        0.9 * bound);
  const std::size_t cells = f.values.size();
  std::vector<double> k1, k2, f1(cells);
  stage(f.values, mode, k1);
  for (std::size_t c = 0; c < cells; ++c) f1[c] = f.values[c] + dt * k1[c];
  stage(f1, mode, k2);
  GridDistribution out{f.grid, std::vector<double>(cells), f.time + dt};
  for (std::size_t c = 0; c < cells; ++c)
    out.values[c] = 0.5 * f.values[c] + 0.5 * (f1[c] + dt * k2[c]);
  for (std::size_t c = 0; c < cells; ++c)
    if (!std::isfinite(out.values[c]))
      throw NumericalError(fmt::format("step produced f = {} in cell {} at t = {}",
                                       out.values[c], c, out.time));
  const double neg = negative_mass(out);
  if (neg > kNegativeMassTolerance)
    throw NumericalError(fmt::format(
        "step produced negative mass {:g} at t = {}; reduce dt or widen the grid",
        neg, out.time));
  return out;
}

std::pair<GridDistribution, EquilibriumParams> Solver::equilibrium(
    double beta, const std::vector<double>& mu) const {
  if (!std::isfinite(beta)) throw std::invalid_argument("beta must be finite");
  if (mu.size() > disc_.casimir_count())
    throw std::invalid_argument("more multipliers than declared Casimirs");
  const std::size_t cells = grid().size();
  std::vector<double> expo(cells);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cells; ++c) {
    double e = -beta * disc_.H()[c] + disc_.log_measure()[c];
    for (std::size_t k = 0; k < mu.size(); ++k) e -= mu[k] * disc_.casimir(k)[c];
    expo[c] = e;
    top = std::max(top, e);
  }
  if (!std::isfinite(top))
    throw NumericalError("equilibrium exponent is not finite on the grid");
  GridDistribution f{grid(), std::vector<double>(cells), 0.0};
  double sum = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    f.values[c] = std::exp(expo[c] - top);
    sum += f.values[c];
  }
  const double dv = grid().cell_volume();
  EquilibriumParams p;
  p.beta = beta;
  p.mu = mu;
  p.log_Z = top + std::log(sum * dv);
  p.Z = std::exp(p.log_Z);
  p.alpha = p.log_Z - 1.0;
  for (double& v : f.values) v /= sum * dv;
  for (std::size_t c = 0; c < cells; ++c) {
    bool edge = false;
    for (int a = 0; a < grid().dimension(); ++a) {
      const int i = grid().coordinate(c, a);
      edge = edge || i == 0 || i == grid().axis(a).cells - 1;
    }
    if (edge) p.boundary_mass += f.values[c] * dv;
  }
  return {std::move(f), std::move(p)};
}

double observable_N(const GridDistribution& f) { return f.mass(); }

double observable_E(const GridDistribution& f, const Discretization& disc) {
  double s = 0.0;
  for (std::size_t c = 0; c < f.values.size(); ++c) s += f.values[c] * disc.H()[c];
  return s * f.grid.cell_volume();
}

double observable_C(const GridDistribution& f, const Discretization& disc,
                    std::size_t k) {
  double s = 0.0;
  const auto& C = disc.casimir(k);
  for (std::size_t c = 0; c < f.values.size(); ++c) s += f.values[c] * C[c];
  return s * f.grid.cell_volume();
}

double observable_S(const GridDistribution& f) {
  double s = 0.0;
  for (double v : f.values)
    if (v >= kLogFloor) s -= v * std::log(v);
  return s * f.grid.cell_volume();
}

double l1_distance(const GridDistribution& a, const GridDistribution& b) {
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("distributions live on different grids");
  double s = 0.0;
  for (std::size_t c = 0; c < a.values.size(); ++c)
    s += std::abs(a.values[c] - b.values[c]);
  return s * a.grid.cell_volume();
}

double negative_mass(const GridDistribution& f) {
  double m = 0.0;
  for (double v : f.values)
    if (v < 0.0) m -= v;
  return m * f.grid.cell_volume();
}

GridDistribution gaussian(const PhaseGrid& grid, const Vector& mean,
                          const Vector& sd) {
  const int n = grid.dimension();
  if (mean.size() != n || sd.size() != n)
    throw std::invalid_argument("mean and sd must match the grid dimension");
  if ((sd.array() <= 0.0).any())
    throw std::invalid_argument("standard deviations must be positive");
  GridDistribution f{grid, std::vector<double>(grid.size()), 0.0};
  Vector x;
  double sum = 0.0;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    grid.center(c, x);
    const double q = ((x - mean).array() / sd.array()).square().sum();
    f.values[c] = std::exp(-0.5 * q);
    sum += f.values[c];
  }
  for (double& v : f.values) v /= sum * grid.cell_volume();
  return f;
}

RelaxResult Solver::relax_to_equilibrium(GridDistribution f0, double dt,
                                         double t_end, const BetaSetting& mode,
                                         const RelaxOptions& options) const {
  if (options.record_every < 1)
    throw std::invalid_argument("record_every must be at least 1");
  if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be nonnegative");
  f0.validate();
  const long steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  RelaxResult res;
  res.steps = steps;
  auto record = [&](const GridDistribution& f) {
    RelaxRecord r;
    r.t = f.time;
    r.N = observable_N(f);
    r.E = observable_E(f, disc_);
    r.S = observable_S(f);
    r.beta = mode.adaptive ? adaptive_beta(f) : mode.value;
    for (std::size_t k = 0; k < disc_.casimir_count(); ++k)
      r.casimirs.push_back(observable_C(f, disc_, k));
    r.entropy_production = entropy_production(f, r.beta);
    const auto [eq, params] = equilibrium(r.beta, options.mu);
    double mc = 0.0;
    for (std::size_t k = 0; k < options.mu.size(); ++k)
      mc += options.mu[k] * r.casimirs[k];
    r.Sigma = r.S - params.alpha * r.N - r.beta * r.E - mc;
    r.L1_eq = l1_distance(f, eq);
    res.series.push_back(std::move(r));
  };
  GridDistribution f = std::move(f0);
  const double E0 = observable_E(f, disc_);
  const double N0 = observable_N(f);
  double S_prev = observable_S(f);
  record(f);
  const double t0 = f.time;
  for (long s = 1; s <= steps; ++s) {
    // The last step is shortened so the run ends on t_end.
    const double h = s == steps ? t0 + t_end - f.time : dt;
    if (h > 0.0) f = step(f, h, mode);
    const double S = observable_S(f);
    res.max_entropy_drop = std::max(res.max_entropy_drop, S_prev - S);
    S_prev = S;
    const double E = observable_E(f, disc_);
    if (E0 != 0.0)
      res.max_energy_drift = std::max(res.max_energy_drift, std::abs(E - E0) / std::abs(E0));
    res.max_mass_drift = std::max(res.max_mass_drift, std::abs(observable_N(f) - N0));
    res.max_negative_mass = std::max(res.max_negative_mass, negative_mass(f));
    if (s % options.record_every == 0 || s == steps) record(f);
  }
  res.final = std::move(f);
  return res;
}

}  // namespace metriplex::fp
