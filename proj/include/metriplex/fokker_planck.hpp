#pragma once

#include "metriplex/grid.hpp"
#include "metriplex/poisson.hpp"

#include <string>
#include <utility>
#include <vector>

namespace metriplex::fp {

/// Cells with f below this are left out of log f, entropy and the
/// diffusive mobility.
constexpr double kLogFloor = 1e-300;
/// Centred fluxes can push far-tail cells slightly below zero where the
/// flow crosses the box wall; steps fail only above this total.
constexpr double kNegativeMassTolerance = 1e-6;

/// Cells within this many layers of a wall carry extra face dissipation.
constexpr int kWallLayer = 3;

/// (b - a) / (log b - log a), zero when either argument is below kLogFloor.
double logarithmic_mean(double a, double b);

/// Difference operator D on a cell-centred grid: centred in the interior,
/// half the one-sided difference in the first and last cell of every axis
/// (zero wall flux).  Cell vector fields are stored interleaved,
/// out[c * n + a].
class Stencil {
 public:
  explicit Stencil(PhaseGrid grid);

  const PhaseGrid& grid() const { return grid_; }
  void gradient(const std::vector<double>& phi, std::vector<double>& out) const;
  /// D^T w, assembled by scattering each stencil row.
  void gradient_transpose(const std::vector<double>& w,
                          std::vector<double>& out) const;
  /// Spectral norm of the 1-D operator along axis a.
  double norm(int a) const { return norms_[a]; }
  /// Logarithmic mean of f between the smallest and largest value in the
  /// row of each axis, interleaved.  Interior rows give m D log f = D f.
  void log_mean(const std::vector<double>& f, std::vector<double>& out) const;

 private:
  PhaseGrid grid_;
  std::vector<double> norms_;
};

/// Face fluxes whose divergence equals D^T w.  faces[a] is laid out like
/// the grid with axis a extended to cells + 1 faces.
struct FluxField {
  PhaseGrid grid;
  std::vector<std::vector<double>> faces;

  std::size_t face_index(int a, std::size_t cell, int face) const;
  /// Largest |flux| over faces on the domain boundary.
  double boundary_max() const;
  /// -(F_{+} - F_{-}) / h summed over axes.
  std::vector<double> divergence() const;
};

FluxField flux_from_cell_field(const PhaseGrid& grid,
                               const std::vector<double>& w);

/// Static per-cell samples of a system on a grid.
class Discretization {
 public:
  Discretization(HamiltonianSystem sys, PhaseGrid grid);

  const HamiltonianSystem& system() const { return sys_; }
  const PhaseGrid& grid() const { return stencil_.grid(); }
  const Stencil& stencil() const { return stencil_; }
  int dimension() const { return n_; }
  std::size_t cells() const { return grid().size(); }
  std::size_t casimir_count() const { return sys_.casimirs.size(); }

  const double* J(std::size_t c) const { return &J_[c * n_ * n_]; }
  const double* g(std::size_t c) const { return &g_[c * n_ * n_]; }
  const std::vector<double>& H() const { return H_; }
  /// D applied to the sampled Hamiltonian, interleaved.
  const std::vector<double>& DH() const { return DH_; }
  /// J DH per cell, interleaved.
  const std::vector<double>& velocity() const { return v_; }
  /// g DH per cell, interleaved.
  const std::vector<double>& gDH() const { return gDH_; }
  const std::vector<double>& casimir(std::size_t k) const { return C_[k]; }
  const std::vector<double>& log_measure() const { return logJ_; }
  double g_max() const { return g_max_; }
  bool diagonal_metric() const { return diagonal_metric_; }
  /// Dissipative mobility per cell as n x n blocks, from the stencil log
  /// means m of f: diag(m) g when g is diagonal everywhere, otherwise
  /// min(m) g so that g grad C = 0 carries over.
  void mobility(const std::vector<double>& f, std::vector<double>& out) const;
  /// Wall-layer viscosity h |v| / 2 of the face between cell c and its
  /// upper neighbour along axis a, at [c * n + a]; zero away from walls.
  const std::vector<double>& wall_viscosity() const { return nu_; }
  double wall_viscosity_max(int a) const { return nu_max_[a]; }

  struct WallFace {
    std::size_t lower, upper;
    double nu, h, dH;
  };
  const std::vector<WallFace>& wall_faces() const { return wall_faces_; }

 private:
  HamiltonianSystem sys_;
  Stencil stencil_;
  int n_;
  std::vector<double> J_, g_, H_, DH_, v_, gDH_, logJ_, nu_, nu_max_;
  std::vector<std::vector<double>> C_;
  std::vector<WallFace> wall_faces_;
  double g_max_ = 0.0;
  bool diagonal_metric_ = true;
};

struct EquilibriumParams {
  double beta = 0.0;
  std::vector<double> mu;
  double alpha = 0.0;
  double Z = 0.0;
  double log_Z = 0.0;
  /// Equilibrium mass in boundary cells; the box approximates a level-set
  /// boundary only when this is below 1e-10.
  double boundary_mass = 0.0;
};

struct BetaSetting {
  bool adaptive = true;
  double value = 1.0;

  static BetaSetting fixed(double b) { return {false, b}; }
  static BetaSetting adapt() { return {true, 0.0}; }
  /// "adaptive" or "fixed:<value>"
  static BetaSetting parse(const std::string& text);
  std::string str() const;
};

class StabilityError : public std::invalid_argument {
 public:
  StabilityError(const std::string& what, double suggested)
      : std::invalid_argument(what), suggested_dt_(suggested) {}
  double suggested_dt() const { return suggested_dt_; }

 private:
  double suggested_dt_;
};

class DegenerateDenominator : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct RelaxRecord {
  double t = 0.0;
  double N = 0.0;
  double E = 0.0;
  double S = 0.0;
  double Sigma = 0.0;
  double beta = 0.0;
  std::vector<double> casimirs;
  double entropy_production = 0.0;
  double L1_eq = 0.0;
};

struct RelaxOptions {
  long record_every = 1;
  /// Casimir multipliers of the reference equilibrium.
  std::vector<double> mu;
};

struct RelaxResult {
  std::vector<RelaxRecord> series;
  GridDistribution final;
  long steps = 0;
  /// max over steps of S(t_k) - S(t_{k+1})
  double max_entropy_drop = 0.0;
  /// max over steps of |E - E0| / |E0|
  double max_energy_drift = 0.0;
  double max_mass_drift = 0.0;
  double max_negative_mass = 0.0;
};

class Solver {
 public:
  Solver(HamiltonianSystem sys, PhaseGrid grid, double D);

  const Discretization& disc() const { return disc_; }
  const PhaseGrid& grid() const { return disc_.grid(); }
  double D() const { return D_; }

  /// w = f Z per cell (interleaved); Z is the Fokker-Planck velocity.
  void cell_flux(const GridDistribution& f, double beta,
                 std::vector<double>& w) const;
  FluxField flux(const GridDistribution& f, double beta) const;
  std::vector<double> fpe_rhs(const GridDistribution& f, double beta) const;
  double compute_beta(const GridDistribution& f) const;
  /// Beta giving dE/dt = 0 with the wall layer included; used in adaptive mode.
  double adaptive_beta(const GridDistribution& f) const;
  double entropy_production(const GridDistribution& f, double beta) const;
  double stability_bound(double beta) const;
  GridDistribution step(const GridDistribution& f, double dt,
                        const BetaSetting& mode) const;
  std::pair<GridDistribution, EquilibriumParams> equilibrium(
      double beta, const std::vector<double>& mu) const;
  RelaxResult relax_to_equilibrium(GridDistribution f0, double dt,
                                   double t_end, const BetaSetting& mode,
                                   const RelaxOptions& options = {}) const;

 private:
  // lf = log f; cell dissipative flux P + beta Q.
  struct Parts {
    std::vector<double> lf, P, Q;
  };
  void parts(const std::vector<double>& f, Parts& out) const;
  double beta_from(const std::vector<double>& f, const Parts& p, bool wall) const;
  void rhs_from(const std::vector<double>& f, double beta, const Parts& p,
                std::vector<double>& out) const;
  void stage(const std::vector<double>& f, const BetaSetting& mode,
             std::vector<double>& out) const;

  Discretization disc_;
  double D_;
};

/// Quadratures of the macroscopic observables.
double observable_N(const GridDistribution& f);
double observable_E(const GridDistribution& f, const Discretization& disc);
double observable_C(const GridDistribution& f, const Discretization& disc,
                    std::size_t k);
double observable_S(const GridDistribution& f);
double l1_distance(const GridDistribution& a, const GridDistribution& b);
/// Σ max(-f, 0) ΔV
double negative_mass(const GridDistribution& f);

/// Normalised Gaussian with per-axis mean and standard deviation.
GridDistribution gaussian(const PhaseGrid& grid, const Vector& mean,
                          const Vector& sd);

}  // namespace metriplex::fp
