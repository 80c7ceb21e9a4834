#include "metriplex/chm_thermal.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace metriplex::chm {

ThermalizeResult thermalize(const ThermalizeConfig& cfg) {
  if (cfg.c != 0.0)
    throw ConfigError("thermalization requires c = 0");
  if (!(cfg.beta >= 0.0) || !(cfg.mu >= 0.0) || (cfg.beta == 0.0 && cfg.mu == 0.0))
    throw NumericalError("equilibrium needs beta, mu >= 0, not both zero");
  if (!(cfg.quench_beta >= 0.0))
    throw ConfigError("quench_beta must be nonnegative");
  if (cfg.steps < 2 || cfg.particles < 2 || cfg.sample_every < 1 ||
      cfg.quench_steps < 0)
    throw ConfigError("thermalization needs steps >= 2, particles >= 2");
  const HamiltonianSystem sys = real_chart_system(cfg.K, cfg.c);
  const ModeBox box(cfg.K);
  const Matrix x0 =
      sample_equilibrium(cfg.K, cfg.beta, cfg.mu, cfg.particles, cfg.seed);
  sde::Ensemble ens(x0, {cfg.D, cfg.seed ^ 0x9e3779b97f4a7c15ULL},
                    sde::FrictionModel::fixed(cfg.quench_beta, cfg.D));

  ThermalizeResult res;
  for (int idx = 0; idx < box.size(); ++idx)
    res.H_equilibrium += 2.0 * std::numbers::pi * std::numbers::pi *
                         box.weight(idx) /
                         (2.0 * alpha(box.mode(idx), cfg.beta, cfg.mu));
  sde::EvolveOptions opt;
  opt.record_every = std::max<long>(1, cfg.sample_every);
  if (cfg.quench_steps > 0) {
    auto q = sde::evolve(std::move(ens), sys, cfg.dt, cfg.quench_steps, opt);
    res.series = std::move(q.series);
    ens = std::move(q.final);
  }
  res.H_after_quench = sde::diagnose(ens, sys, std::nullopt).E_mean;
  ens.friction() = sde::FrictionModel::fixed(cfg.beta, cfg.D);

  const auto& reps = box.representatives();
  const long N = ens.size();
  // Per-particle running sums of |phi|^2 per independent mode.
  Matrix sums = Matrix::Zero(1 + static_cast<long>(reps.size()), N);
  const long burn = cfg.steps / 2;
  for (long s = 1; s <= cfg.steps; ++s) {
    sde::step_stratonovich(ens, sys, cfg.dt);
    if (s % opt.record_every == 0 || s == cfg.steps)
      res.series.push_back(sde::diagnose(ens, sys, std::nullopt));
    if (s > burn && (s - burn) % cfg.sample_every == 0) {
      const Matrix& X = ens.particles();
      for (long p = 0; p < N; ++p) {
        sums(0, p) += X(0, p) * X(0, p);
        for (std::size_t r = 0; r < reps.size(); ++r)
          sums(1 + r, p) += X(1 + 2 * r, p) * X(1 + 2 * r, p) +
                            X(2 + 2 * r, p) * X(2 + 2 * r, p);
      }
      ++res.snapshots;
    }
  }
  if (res.snapshots == 0) throw ConfigError("no snapshots were averaged");
  const Matrix per = sums / static_cast<double>(res.snapshots);
  std::vector<double> mean(per.rows()), se(per.rows());
  for (Eigen::Index k = 0; k < per.rows(); ++k) {
    double s = 0.0;
    for (long p = 0; p < N; ++p) s += per(k, p);
    const double mu = s / N;
    double v = 0.0;
    for (long p = 0; p < N; ++p) v += (per(k, p) - mu) * (per(k, p) - mu);
    mean[k] = mu;
    se[k] = std::sqrt(v / (N - 1) / N);
  }
  for (int idx = 0; idx < box.size(); ++idx) {
    const ModeIndex k = box.mode(idx);
    long slot = 0;
    if (idx != box.zero()) {
      const int rep = (k.n > 0 || (k.n == 0 && k.m > 0)) ? idx : box.conjugate(idx);
      for (std::size_t r = 0; r < reps.size(); ++r)
        if (reps[r] == rep) slot = 1 + static_cast<long>(r);
    }
    SpectrumRow row;
    row.n = k.n;
    row.m = k.m;
    row.alpha = alpha(k, cfg.beta, cfg.mu);
    row.mean_sq = mean[slot];
    row.predicted = 1.0 / (2.0 * row.alpha);
    row.std_error = se[slot];
    res.spectrum.push_back(row);
  }
  res.final_particles = ens.particles();
  res.H_final = sde::diagnose(ens, sys, std::nullopt).E_mean;
  return res;
}

}  // namespace metriplex::chm
