#pragma once

#include "metriplex/poisson.hpp"

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace metriplex::chm {

using Complex = std::complex<double>;

struct ModeIndex {
  int n = 0;
  int m = 0;
};

/// Square truncation box |n|, |m| <= K, stored row-major (n outer, m inner).
class ModeBox {
 public:
  explicit ModeBox(int K);

  int K() const { return K_; }
  int width() const { return 2 * K_ + 1; }
  int size() const { return width() * width(); }
  bool contains(int n, int m) const {
    return n >= -K_ && n <= K_ && m >= -K_ && m <= K_;
  }
  int index(int n, int m) const { return (n + K_) * width() + (m + K_); }
  ModeIndex mode(int idx) const {
    return {idx / width() - K_, idx % width() - K_};
  }
  int conjugate(int idx) const {
    const ModeIndex k = mode(idx);
    return index(-k.n, -k.m);
  }
  int zero() const { return index(0, 0); }
  /// 1 + n^2 + m^2
  double weight(int idx) const {
    const ModeIndex k = mode(idx);
    return 1.0 + k.n * k.n + k.m * k.m;
  }
  /// Index of mode i + j, or -1 outside the box.
  int sum(int i, int j) const {
    const ModeIndex a = mode(i), b = mode(j);
    return contains(a.n + b.n, a.m + b.m) ? index(a.n + b.n, a.m + b.m) : -1;
  }
  /// One representative per conjugate pair: n > 0, or n = 0 and m > 0.
  const std::vector<int>& representatives() const { return reps_; }
  /// Real-chart dimension: phi^00 plus (Re, Im) per representative.
  int real_dimension() const { return 1 + 2 * static_cast<int>(reps_.size()); }

 private:
  int K_;
  std::vector<int> reps_;
};

struct Coefficients {
  Complex B;
  double C = 0.0;
};

Coefficients coefficients(ModeIndex i, ModeIndex j, double c);

class SpectralState {
 public:
  SpectralState(int K, double c);

  const ModeBox& box() const { return box_; }
  int K() const { return box_.K(); }
  double c() const { return c_; }
  std::vector<Complex>& coeffs() { return phi_; }
  const std::vector<Complex>& coeffs() const { return phi_; }
  Complex& at(int n, int m) { return phi_[box_.index(n, m)]; }
  Complex at(int n, int m) const { return phi_[box_.index(n, m)]; }

  /// Average each coefficient with the conjugate of its partner.
  void enforce_reality();
  double reality_violation() const;

  Vector to_real() const;
  static SpectralState from_real(int K, double c, const Vector& x);

 private:
  ModeBox box_;
  double c_;
  std::vector<Complex> phi_;
};

/// Random real-valued state with entries ~ N(0,1) scaled so that the
/// coefficient vector has the given Euclidean norm.
SpectralState random_state(int K, double c, std::mt19937_64& rng,
                           double norm = 1.0);

/// Precomputed coefficient tables for the truncated operator.
class CHMOperator {
 public:
  CHMOperator(int K, double c);

  const ModeBox& box() const { return box_; }
  double c() const { return c_; }
  Complex B(int i, int j) const { return B_[i * M_ + j]; }
  double C(int i, int j) const { return C_[i * M_ + j]; }
  int sum(int i, int j) const { return S_[i * M_ + j]; }

  /// J^{ij} = B^{ij} + C^{ij} phi^{i+j} (Galerkin cutoff outside the box).
  Complex entry(int i, int j, const std::vector<Complex>& phi) const;
  Eigen::MatrixXcd complex_matrix(const std::vector<Complex>& phi) const;

  /// Real-chart operator T J T^T built entry by entry.
  void real_chart(const Vector& x, Matrix& out) const;
  void real_chart_partials(const Vector& x, std::vector<Matrix>& out) const;

  /// max |cyclic sum| over triads whose pairwise and triple sums stay in
  /// the box, and separately over the remaining (boundary) triads.
  struct JacobiReport {
    double interior = 0.0;
    double boundary = 0.0;
    long interior_triads = 0;
    long boundary_triads = 0;
  };
  JacobiReport jacobi(const std::vector<Complex>& phi) const;

 private:
  void fill_real(const std::vector<Complex>& phi, bool with_B,
                 Matrix& out) const;

  ModeBox box_;
  double c_;
  int M_;
  std::vector<Complex> B_;
  std::vector<double> C_;
  std::vector<int> S_;
};

PoissonOperatorField build_poisson(int K, double c);

/// Real-chart Hamiltonian system with H and C as scalar fields.
HamiltonianSystem real_chart_system(int K, double c);

double hamiltonian(const SpectralState& s);
/// dH/dphi^{uv} treating phi^{uv} and phi^{-u,-v} as independent.
std::vector<Complex> hamiltonian_gradient(const SpectralState& s);

struct CasimirValue {
  double value = 0.0;
  std::optional<std::string> warning;
};
CasimirValue casimir(const SpectralState& s);
std::vector<Complex> casimir_gradient(const SpectralState& s);

/// Direct convolution form of the truncated equations.
std::vector<Complex> rhs_deterministic(const SpectralState& s);
/// Operator path: J(phi) grad H.
std::vector<Complex> rhs_operator(const SpectralState& s);
/// J(phi) grad C.
std::vector<Complex> casimir_residual(const SpectralState& s);

struct IntegrationRecord {
  double t = 0.0;
  double H = 0.0;
  double C = 0.0;
  double reality = 0.0;
};

struct IntegrationResult {
  SpectralState state;
  std::vector<IntegrationRecord> series;
};

IntegrationResult integrate_deterministic(SpectralState s, double dt,
                                          long steps, long record_every = 1);

/// Finite-difference trace of the flow Jacobian in the real chart.
double liouville_trace(const SpectralState& s);

/// alpha_nm = 2 pi^2 w [beta + mu w], w = 1 + n^2 + m^2.
double alpha(ModeIndex k, double beta, double mu);

struct PartitionFunction {
  double Z = 0.0;
  double log_Z = 0.0;
  /// The closed-form product as printed, evaluated with complex arithmetic.
  Complex literal;
};
PartitionFunction partition_function(int K, double beta, double mu);

/// Draw real-chart samples from exp(-beta H - mu C) exactly (columns).
Matrix sample_equilibrium(int K, double beta, double mu, long count,
                          std::uint64_t seed);

}  // namespace metriplex::chm
