#pragma once

#include "metriplex/chm.hpp"
#include "metriplex/stochastic.hpp"

#include <cstdint>
#include <vector>

namespace metriplex::chm {

struct ThermalizeConfig {
  int K = 2;
  double c = 0.0;
  double D = 500.0;
  double beta = 1.0;
  double mu = 1.0;
  double dt = 0.005;
  /// Relaxation steps at beta; the second half is time-averaged.
  long steps = 1000;
  long particles = 10000;
  std::uint64_t seed = 1;
  /// The ensemble starts from exact equilibrium samples, so every Casimir
  /// carries its equilibrium marginal, then is driven at quench_beta to move
  /// it off equilibrium within each leaf before relaxing.
  double quench_beta = 0.25;
  long quench_steps = 200;
  long sample_every = 10;
};

struct SpectrumRow {
  int n = 0;
  int m = 0;
  double alpha = 0.0;
  double mean_sq = 0.0;
  double predicted = 0.0;
  double std_error = 0.0;
};

struct ThermalizeResult {
  std::vector<SpectrumRow> spectrum;
  Matrix final_particles;
  /// Energy mean right after the quench and at the end of relaxation.
  double H_after_quench = 0.0;
  double H_final = 0.0;
  double H_equilibrium = 0.0;
  long snapshots = 0;
  std::vector<sde::EnsembleDiagnostics> series;
};

ThermalizeResult thermalize(const ThermalizeConfig& cfg);

}  // namespace metriplex::chm
