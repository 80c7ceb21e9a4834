#pragma once

#include "metriplex/grid.hpp"
#include "metriplex/poisson.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace metriplex::sde {

struct NoiseModel {
  double D = 0.0;
  std::uint64_t seed = 0;
};

enum class BetaMode { fixed, adaptive };

struct FrictionModel {
  BetaMode mode = BetaMode::fixed;
  double beta = 0.0;
  double gamma = 0.0;
  /// Steps between beta re-estimates in adaptive mode.
  int adapt_every = 10;

  /// gamma = beta D / 2
  static FrictionModel fixed(double beta, double D);
  static FrictionModel adaptive(double beta0, double D, int every = 10);
  bool fluctuation_dissipation_holds(double D) const {
    return gamma == beta * D / 2.0;
  }
};

/// Particles stored as columns of an n x N matrix.  Each particle owns its
/// random stream, derived from (seed, particle index).
class Ensemble {
 public:
  Ensemble(Matrix particles, NoiseModel noise, FrictionModel friction,
           double time = 0.0);

  const Matrix& particles() const { return x_; }
  Matrix& particles() { return x_; }
  long size() const { return static_cast<long>(x_.cols()); }
  int dimension() const { return static_cast<int>(x_.rows()); }
  double time() const { return t_; }
  void set_time(double t) { t_ = t; }
  const NoiseModel& noise() const { return noise_; }
  const FrictionModel& friction() const { return friction_; }
  FrictionModel& friction() { return friction_; }

  /// Fill dw with independent standard normals from particle p's stream.
  void draw(long p, Vector& dw);

 private:
  Matrix x_;
  NoiseModel noise_;
  FrictionModel friction_;
  double t_;
  std::vector<std::mt19937_64> engines_;
  std::vector<std::normal_distribution<double>> normals_;
};

struct EnsembleDiagnostics {
  double t = 0.0;
  double E_mean = 0.0;
  std::vector<double> casimir_means;
  double entropy_estimate = 0.0;
  std::string entropy_estimator;
  double beta_estimate = 0.0;
};

struct EntropyEstimate {
  double value = 0.0;
  std::string estimator = "histogram-plugin";
  /// Miller-Madow correction (occupied - 1) / (2N); add to debias.
  double miller_madow_bias = 0.0;
  long occupied_cells = 0;
  double outside_fraction = 0.0;
};

class BlowUpError : public NumericalError {
 public:
  BlowUpError(const std::string& what, double last_good_time)
      : NumericalError(what), last_good_time_(last_good_time) {}
  double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_;
};

class InsufficientSamples : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

constexpr double kBlowUpThreshold = 1e12;
/// Minimum histogram count for a cell to enter the beta estimate.
constexpr long kMinCellCount = 10;

/// J grad H - gamma g grad H
Vector drift(const HamiltonianSystem& sys, const Vector& x, double gamma);

/// One stochastic Heun step (Stratonovich) for every particle.
void step_stratonovich(Ensemble& ens, const HamiltonianSystem& sys, double dt);

struct EvolveOptions {
  long record_every = 1;
  /// Histogram grid for entropy and beta estimates; required in adaptive mode.
  std::optional<PhaseGrid> density_grid;
};

struct EvolveResult {
  std::vector<EnsembleDiagnostics> series;
  Ensemble final;
};

EvolveResult evolve(Ensemble ens, const HamiltonianSystem& sys, double dt,
                    long steps, const EvolveOptions& options = {});

EnsembleDiagnostics diagnose(const Ensemble& ens, const HamiltonianSystem& sys,
                             const std::optional<PhaseGrid>& density_grid);

double estimate_beta_samples(const Matrix& samples,
                             const HamiltonianSystem& sys,
                             const PhaseGrid& grid);
double estimate_beta_ensemble(const Ensemble& ens, const HamiltonianSystem& sys,
                              const PhaseGrid& grid);

EntropyEstimate entropy_estimate_samples(const Matrix& samples,
                                         const PhaseGrid& grid);
EntropyEstimate entropy_estimate(const Ensemble& ens, const PhaseGrid& grid);

}  // namespace metriplex::sde
