#include "metriplex/stochastic.hpp"

#include "metriplex/parallel.hpp"

#include <fmt/format.h>

#include <cmath>

namespace metriplex::sde {

FrictionModel FrictionModel::fixed(double beta, double D) {
  if (!std::isfinite(beta)) throw std::invalid_argument("beta must be finite");
  return {BetaMode::fixed, beta, beta * D / 2.0, 10};
}

FrictionModel FrictionModel::adaptive(double beta0, double D, int every) {
  if (every < 1) throw std::invalid_argument("adapt_every must be >= 1");
  return {BetaMode::adaptive, beta0, beta0 * D / 2.0, every};
}

Ensemble::Ensemble(Matrix particles, NoiseModel noise, FrictionModel friction,
                   double time)
    : x_(std::move(particles)),
      noise_(noise),
      friction_(friction),
      t_(time) {
  if (x_.cols() < 1) throw std::invalid_argument("ensemble needs N >= 1");
  if (!x_.allFinite())
    throw std::invalid_argument("ensemble coordinates must be finite");
  if (!(noise_.D >= 0.0)) throw std::invalid_argument("D must be nonnegative");
  engines_.reserve(x_.cols());
  const auto lo = static_cast<std::uint32_t>(noise_.seed);
  const auto hi = static_cast<std::uint32_t>(noise_.seed >> 32);
  for (Eigen::Index p = 0; p < x_.cols(); ++p) {
    std::seed_seq seq{lo, hi, static_cast<std::uint32_t>(p),
                      static_cast<std::uint32_t>(p >> 32)};
    engines_.emplace_back(seq);
  }
  normals_.assign(x_.cols(), std::normal_distribution<double>());
}

void Ensemble::draw(long p, Vector& dw) {
  for (Eigen::Index i = 0; i < dw.size(); ++i) dw[i] = normals_[p](engines_[p]);
}

Vector drift(const HamiltonianSystem& sys, const Vector& x, double gamma) {
  const Matrix j = sys.op(x);
  const Vector g = sys.hamiltonian.gradient(x);
  const Vector v = j * g;
  if (gamma == 0.0) return v;
  return v - gamma * (j * (j.transpose() * g));
}

namespace {

struct Scratch {
  Matrix j0, j1;
  Vector x, xt, g, v, dw, a0, a1;
};

void drift_into(const HamiltonianSystem& sys, const Vector& x, double gamma,
                Matrix& j, Vector& g, Vector& v, Vector& out) {
  sys.op.evaluate(x, j);
  sys.hamiltonian.gradient(x, g);
  out.noalias() = j * g;
  if (gamma != 0.0) {
    v.noalias() = j.transpose() * g;
    out.noalias() -= gamma * (j * v);
  }
}

}  // namespace

void step_stratonovich(Ensemble& ens, const HamiltonianSystem& sys, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const int n = ens.dimension();
  if (n != sys.dimension())
    throw std::invalid_argument("ensemble and system dimensions differ");
  const double gamma = ens.friction().gamma;
  const double amp = std::sqrt(ens.noise().D * dt);
  const double t0 = ens.time();
  Matrix& X = ens.particles();
  parallel_for(static_cast<std::size_t>(ens.size()),
               [&](std::size_t lo, std::size_t hi) {
    Scratch s;
    s.dw.resize(n);
    for (std::size_t p = lo; p < hi; ++p) {
      s.x = X.col(p);
      ens.draw(static_cast<long>(p), s.dw);
      drift_into(sys, s.x, gamma, s.j0, s.g, s.v, s.a0);
      s.xt = s.x + dt * s.a0;
      if (amp != 0.0) s.xt.noalias() += amp * (s.j0 * s.dw);
      drift_into(sys, s.xt, gamma, s.j1, s.g, s.v, s.a1);
      s.x += 0.5 * dt * (s.a0 + s.a1);
      if (amp != 0.0) s.x.noalias() += 0.5 * amp * ((s.j0 + s.j1) * s.dw);
      for (int i = 0; i < n; ++i)
        if (!std::isfinite(s.x[i]) || std::abs(s.x[i]) > kBlowUpThreshold)
          throw BlowUpError(
              fmt::format("particle {} left |x| <= {:g} at t = {} (last good "
                          "t = {})",
                          p, kBlowUpThreshold, t0 + dt, t0),
              t0);
      X.col(p) = s.x;
    }
  });
  ens.set_time(t0 + dt);
}

namespace {

std::vector<long> histogram(const Matrix& samples, const PhaseGrid& grid,
                            std::vector<long>& cell_of, long& outside) {
  std::vector<long> counts(grid.size(), 0);
  cell_of.assign(samples.cols(), -1);
  outside = 0;
  Vector x;
  for (Eigen::Index p = 0; p < samples.cols(); ++p) {
    x = samples.col(p);
    if (auto c = grid.locate(x)) {
      ++counts[*c];
      cell_of[p] = static_cast<long>(*c);
    } else {
      ++outside;
    }
  }
  return counts;
}

}  // namespace

double estimate_beta_samples(const Matrix& samples,
                             const HamiltonianSystem& sys,
                             const PhaseGrid& grid) {
  const long N = static_cast<long>(samples.cols());
  if (samples.rows() != sys.dimension() || grid.dimension() != sys.dimension())
    throw std::invalid_argument("sample, grid and system dimensions differ");
  if (N < kMinCellCount)
    throw InsufficientSamples(fmt::format(
        "beta estimate needs at least {} samples, got {}", kMinCellCount, N));
  std::vector<long> cell_of;
  long outside = 0;
  const std::vector<long> counts = histogram(samples, grid, cell_of, outside);
  const int n = grid.dimension();

  // Per-cell log-density gradient; NaN marks cells that cannot contribute.
  auto lg = [&](std::size_t c) { return std::log(static_cast<double>(counts[c])); };
  std::vector<Vector> dlog(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    if (counts[c] < kMinCellCount) continue;
    Vector d(n);
    bool ok = true;
    for (int a = 0; a < n && ok; ++a) {
      const int i = grid.coordinate(c, a);
      const double h = grid.axis(a).width();
      const std::size_t s = grid.stride(a);
      const bool up = i + 1 < grid.axis(a).cells && counts[c + s] >= kMinCellCount;
      const bool dn = i > 0 && counts[c - s] >= kMinCellCount;
      // One-sided differences would bias the edge cells, which carry the most weight.
      if (up && dn)
        d[a] = (lg(c + s) - lg(c - s)) / (2.0 * h);
      else
        ok = false;
    }
    if (ok) dlog[c] = std::move(d);
  }

  // Velocity and J are taken at the cell centre too, so J grad C cancels exactly.
  double num = 0.0, den = 0.0;
  long used = 0, resolved = 0;
  for (long k : counts)
    if (k >= kMinCellCount) resolved += k;
  Matrix j;
  Vector x, g, v;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    if (dlog[c].size() == 0) continue;
    grid.center(c, x);
    sys.op.evaluate(x, j);
    sys.hamiltonian.gradient(x, g);
    v.noalias() = j * g;
    const double w = static_cast<double>(counts[c]);
    num -= w * v.dot(j * dlog[c]);
    den += w * v.squaredNorm();
    used += counts[c];
  }
  if (2 * resolved < N)
    throw InsufficientSamples(fmt::format(
        "only {} of {} samples lie in cells with {} or more samples; use a "
        "coarser density grid or more samples",
        resolved, N, kMinCellCount));
  if (used == 0)
    throw InsufficientSamples(fmt::format(
        "no histogram cell with {} or more samples has resolved neighbours",
        kMinCellCount));
  if (!(den > 1e-300))
    throw NumericalError(
        "beta estimate denominator vanishes (particles at critical points)");
  return num / den;
}

double estimate_beta_ensemble(const Ensemble& ens, const HamiltonianSystem& sys,
                              const PhaseGrid& grid) {
  return estimate_beta_samples(ens.particles(), sys, grid);
}

EntropyEstimate entropy_estimate_samples(const Matrix& samples,
                                         const PhaseGrid& grid) {
  const long N = static_cast<long>(samples.cols());
  if (N < 1) throw InsufficientSamples("entropy estimate needs samples");
  if (samples.rows() != grid.dimension())
    throw std::invalid_argument("sample and grid dimensions differ");
  std::vector<long> cell_of;
  long outside = 0;
  const std::vector<long> counts = histogram(samples, grid, cell_of, outside);
  EntropyEstimate e;
  const double dv = grid.cell_volume();
  double s = 0.0;
  for (long k : counts) {
    if (k == 0) continue;
    ++e.occupied_cells;
    const double pk = static_cast<double>(k) / N;
    s -= pk * std::log(pk / dv);
  }
  e.value = s;
  e.outside_fraction = static_cast<double>(outside) / N;
  e.miller_madow_bias = (e.occupied_cells - 1) / (2.0 * N);
  return e;
}

EntropyEstimate entropy_estimate(const Ensemble& ens, const PhaseGrid& grid) {
  return entropy_estimate_samples(ens.particles(), grid);
}

EnsembleDiagnostics diagnose(const Ensemble& ens, const HamiltonianSystem& sys,
                             const std::optional<PhaseGrid>& density_grid) {
  EnsembleDiagnostics d;
  d.t = ens.time();
  const long N = ens.size();
  const Matrix& X = ens.particles();
  std::vector<double> h(N);
  const std::size_t m = sys.casimirs.size();
  std::vector<double> c(N * m);
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t lo, std::size_t hi) {
    Vector x;
    for (std::size_t p = lo; p < hi; ++p) {
      x = X.col(p);
      h[p] = sys.hamiltonian(x);
      for (std::size_t k = 0; k < m; ++k) c[p * m + k] = sys.casimirs[k](x);
    }
  });
  double sh = 0.0;
  std::vector<double> sc(m, 0.0);
  for (long p = 0; p < N; ++p) {
    sh += h[p];
    for (std::size_t k = 0; k < m; ++k) sc[k] += c[p * m + k];
  }
  d.E_mean = sh / N;
  for (double v : sc) d.casimir_means.push_back(v / N);
  d.beta_estimate = ens.friction().beta;
  d.entropy_estimate = std::nan("");
  if (density_grid) {
    const EntropyEstimate e = entropy_estimate(ens, *density_grid);
    d.entropy_estimate = e.value;
    d.entropy_estimator = e.estimator;
    try {
      d.beta_estimate = estimate_beta_ensemble(ens, sys, *density_grid);
    } catch (const NumericalError&) {
      d.beta_estimate = std::nan("");
    }
  }
  return d;
}

EvolveResult evolve(Ensemble ens, const HamiltonianSystem& sys, double dt,
                    long steps, const EvolveOptions& options) {
  if (steps < 1) throw std::invalid_argument("steps must be at least 1");
  if (options.record_every < 1)
    throw std::invalid_argument("record_every must be at least 1");
  const bool adaptive = ens.friction().mode == BetaMode::adaptive;
  if (adaptive && !options.density_grid)
    throw std::invalid_argument("adaptive beta needs a density grid");
  const double D = ens.noise().D;
  auto adapt = [&] {
    const double b = estimate_beta_ensemble(ens, sys, *options.density_grid);
    ens.friction().beta = b;
    ens.friction().gamma = b * D / 2.0;
  };
  EvolveResult res{{}, ens};
  if (adaptive) adapt();
  res.series.push_back(diagnose(ens, sys, options.density_grid));
  for (long s = 1; s <= steps; ++s) {
    step_stratonovich(ens, sys, dt);
    if (adaptive && s % ens.friction().adapt_every == 0) adapt();
    if (s % options.record_every == 0 || s == steps)
      res.series.push_back(diagnose(ens, sys, options.density_grid));
  }
  res.final = std::move(ens);
  return res;
}

}  // namespace metriplex::sde
