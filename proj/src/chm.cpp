#include "metriplex/chm.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace metriplex::chm {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kFourPi2 = 4.0 * kPi * kPi;
}  // namespace

ModeBox::ModeBox(int K) : K_(K) {
  if (K < 1) throw ConfigError("truncation K must be at least 1");
  for (int idx = 0; idx < size(); ++idx) {
    const ModeIndex k = mode(idx);
    if (k.n > 0 || (k.n == 0 && k.m > 0)) reps_.push_back(idx);
  }
}

Coefficients coefficients(ModeIndex i, ModeIndex j, double c) {
  const double wi = 1.0 + i.n * i.n + i.m * i.m;
  const double wj = 1.0 + j.n * j.n + j.m * j.m;
  const double denom = kFourPi2 * (wi * wj);
  Coefficients out;
  if (i.n == -j.n && i.m == -j.m)
    out.B = Complex(0.0, c * i.n / denom);
  const int sn = i.n + j.n, sm = i.m + j.m;
  out.C = (i.n * j.m - i.m * j.n) * (1.0 + sn * sn + sm * sm) / denom;
  return out;
}

SpectralState::SpectralState(int K, double c)
    : box_(K), c_(c), phi_(box_.size(), Complex(0.0, 0.0)) {}

void SpectralState::enforce_reality() {
  for (int idx = 0; idx < box_.size(); ++idx) {
    const int cj = box_.conjugate(idx);
    if (cj < idx) continue;
    const Complex v = 0.5 * (phi_[idx] + std::conj(phi_[cj]));
    phi_[idx] = v;
    phi_[cj] = std::conj(v);
  }
}

double SpectralState::reality_violation() const {
  double worst = 0.0;
  for (int idx = 0; idx < box_.size(); ++idx)
    worst = std::max(worst,
                     std::abs(phi_[box_.conjugate(idx)] - std::conj(phi_[idx])));
  return worst;
}

Vector SpectralState::to_real() const {
  Vector x(box_.real_dimension());
  x[0] = phi_[box_.zero()].real();
  const auto& reps = box_.representatives();
  for (std::size_t r = 0; r < reps.size(); ++r) {
    x[1 + 2 * r] = phi_[reps[r]].real();
    x[2 + 2 * r] = phi_[reps[r]].imag();
  }
  return x;
}

SpectralState SpectralState::from_real(int K, double c, const Vector& x) {
  SpectralState s(K, c);
  const ModeBox& box = s.box();
  if (x.size() != box.real_dimension())
    throw std::invalid_argument("real-chart vector has wrong dimension");
  s.phi_[box.zero()] = x[0];
  const auto& reps = box.representatives();
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const Complex v(x[1 + 2 * r], x[2 + 2 * r]);
    s.phi_[reps[r]] = v;
    s.phi_[box.conjugate(reps[r])] = std::conj(v);
  }
  return s;
}

SpectralState random_state(int K, double c, std::mt19937_64& rng,
                           double norm) {
  SpectralState s(K, c);
  std::normal_distribution<double> normal;
  Vector x(s.box().real_dimension());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
  SpectralState out = SpectralState::from_real(K, c, x);
  double sq = 0.0;
  for (const Complex& v : out.coeffs()) sq += std::norm(v);
  const double scale = norm / std::sqrt(sq);
  for (Complex& v : out.coeffs()) v *= scale;
  return out;
}

CHMOperator::CHMOperator(int K, double c)
    : box_(K), c_(c), M_(box_.size()), B_(M_ * M_), C_(M_ * M_), S_(M_ * M_) {
  for (int i = 0; i < M_; ++i)
    for (int j = 0; j < M_; ++j) {
      const Coefficients k = coefficients(box_.mode(i), box_.mode(j), c);
      B_[i * M_ + j] = k.B;
      C_[i * M_ + j] = k.C;
      S_[i * M_ + j] = box_.sum(i, j);
    }
}

Complex CHMOperator::entry(int i, int j, const std::vector<Complex>& phi) const {
  const int s = S_[i * M_ + j];
  const Complex lin = s < 0 ? Complex(0.0, 0.0) : C_[i * M_ + j] * phi[s];
  return B_[i * M_ + j] + lin;
}

Eigen::MatrixXcd CHMOperator::complex_matrix(
    const std::vector<Complex>& phi) const {
  Eigen::MatrixXcd out(M_, M_);
  for (int i = 0; i < M_; ++i)
    for (int j = 0; j < M_; ++j) out(i, j) = entry(i, j, phi);
  return out;
}

void CHMOperator::fill_real(const std::vector<Complex>& phi, bool with_B,
                            Matrix& out) const {
  const auto& reps = box_.representatives();
  const int P = static_cast<int>(reps.size());
  out.setZero(1 + 2 * P, 1 + 2 * P);
  auto J = [&](int i, int j) {
    const int s = S_[i * M_ + j];
    Complex v = with_B ? B_[i * M_ + j] : Complex(0.0, 0.0);
    if (s >= 0) v += C_[i * M_ + j] * phi[s];
    return v;
  };
  // Row and column of phi^00 vanish because C^{0j} = B^{0j} = 0.
  for (int r = 0; r < P; ++r) {
    const int k = reps[r];
    for (int s = 0; s < P; ++s) {
      const int l = reps[s];
      const int lc = box_.conjugate(l);
      const Complex jkl = J(k, l);
      const Complex jklc = J(k, lc);
      out(1 + 2 * r, 1 + 2 * s) = 0.5 * (jkl.real() + jklc.real());
      out(1 + 2 * r, 2 + 2 * s) = 0.5 * (jkl.imag() - jklc.imag());
      out(2 + 2 * r, 1 + 2 * s) = 0.5 * (jkl.imag() + jklc.imag());
      out(2 + 2 * r, 2 + 2 * s) = 0.5 * (jklc.real() - jkl.real());
    }
  }
}

void CHMOperator::real_chart(const Vector& x, Matrix& out) const {
  const auto& reps = box_.representatives();
  std::vector<Complex> phi(M_, Complex(0.0, 0.0));
  phi[box_.zero()] = x[0];
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const Complex v(x[1 + 2 * r], x[2 + 2 * r]);
    phi[reps[r]] = v;
    phi[box_.conjugate(reps[r])] = std::conj(v);
  }
  fill_real(phi, true, out);
}

void CHMOperator::real_chart_partials(const Vector& x,
                                      std::vector<Matrix>& out) const {
  const auto& reps = box_.representatives();
  const int n = box_.real_dimension();
  out.assign(n, Matrix::Zero(n, n));
  std::vector<Complex> dphi(M_, Complex(0.0, 0.0));
  (void)x;  // J is affine in the state
  dphi[box_.zero()] = 1.0;
  fill_real(dphi, false, out[0]);
  dphi[box_.zero()] = 0.0;
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const int k = reps[r], kc = box_.conjugate(k);
    dphi[k] = 1.0;
    dphi[kc] = 1.0;
    fill_real(dphi, false, out[1 + 2 * r]);
    dphi[k] = Complex(0.0, 1.0);
    dphi[kc] = Complex(0.0, -1.0);
    fill_real(dphi, false, out[2 + 2 * r]);
    dphi[k] = dphi[kc] = 0.0;
  }
}

CHMOperator::JacobiReport CHMOperator::jacobi(
    const std::vector<Complex>& phi) const {
  JacobiReport rep;
  // d_m J^{jk} = C^{jk} delta_{m, j+k}, so the cyclic term for i is
  // J^{i, j+k} C^{jk} when j + k lies in the box.
  auto term = [&](int i, int j, int k) {
    const int s = S_[j * M_ + k];
    if (s < 0) return Complex(0.0, 0.0);
    return entry(i, s, phi) * C_[j * M_ + k];
  };
  for (int i = 0; i < M_; ++i)
    for (int j = 0; j < M_; ++j)
      for (int k = 0; k < M_; ++k) {
        const Complex cyc = term(i, j, k) + term(j, k, i) + term(k, i, j);
        const int ij = S_[i * M_ + j];
        const bool interior = ij >= 0 && S_[j * M_ + k] >= 0 &&
                              S_[k * M_ + i] >= 0 && S_[ij * M_ + k] >= 0;
        if (interior) {
          rep.interior = std::max(rep.interior, std::abs(cyc));
          ++rep.interior_triads;
        } else {
          rep.boundary = std::max(rep.boundary, std::abs(cyc));
          ++rep.boundary_triads;
        }
      }
  return rep;
}

PoissonOperatorField build_poisson(int K, double c) {
  auto op = std::make_shared<const CHMOperator>(K, c);
  const int n = op->box().real_dimension();
  return PoissonOperatorField(
      n, [op](const Vector& x, Matrix& out) { op->real_chart(x, out); },
      [op](const Vector& x, std::vector<Matrix>& out) {
        op->real_chart_partials(x, out);
      });
}

namespace {

// Quadratic form 2 pi^2 sum w^p |phi|^2 in the real chart.
ScalarField chart_quadratic(const std::string& name, int K, int power) {
  auto box = std::make_shared<const ModeBox>(K);
  std::vector<double> weights(box->real_dimension());
  weights[0] = 1.0;
  const auto& reps = box->representatives();
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const double w = std::pow(box->weight(reps[r]), power);
    weights[1 + 2 * r] = weights[2 + 2 * r] = 2.0 * w;
  }
  auto wv = std::make_shared<const Vector>(
      Eigen::Map<const Vector>(weights.data(), weights.size()));
  const double k = 2.0 * kPi * kPi;
  return ScalarField(
      name,
      [wv, k](const Vector& x) {
        return k * (wv->array() * x.array().square()).sum();
      },
      [wv, k](const Vector& x, Vector& g) {
        g = 2.0 * k * (wv->array() * x.array()).matrix();
      });
}

}  // namespace

HamiltonianSystem real_chart_system(int K, double c) {
  HamiltonianSystem sys;
  sys.name = "chm";
  sys.op = build_poisson(K, c);
  sys.hamiltonian = chart_quadratic("H", K, 1);
  sys.casimirs.push_back(chart_quadratic("C", K, 2));
  return sys;
}

double hamiltonian(const SpectralState& s) {
  double sum = 0.0;
  for (int idx = 0; idx < s.box().size(); ++idx)
    sum += s.box().weight(idx) * std::norm(s.coeffs()[idx]);
  return 2.0 * kPi * kPi * sum;
}

std::vector<Complex> hamiltonian_gradient(const SpectralState& s) {
  std::vector<Complex> g(s.box().size());
  for (int idx = 0; idx < s.box().size(); ++idx)
    g[idx] = kFourPi2 * s.box().weight(idx) * std::conj(s.coeffs()[idx]);
  return g;
}

CasimirValue casimir(const SpectralState& s) {
  CasimirValue out;
  double sum = 0.0;
  for (int idx = 0; idx < s.box().size(); ++idx) {
    const double w = s.box().weight(idx);
    sum += w * w * std::norm(s.coeffs()[idx]);
  }
  out.value = 2.0 * kPi * kPi * sum;
  if (s.c() != 0.0)
    out.warning = fmt::format(
        "c = {} is nonzero; C is not an exact invariant of this system", s.c());
  return out;
}

std::vector<Complex> casimir_gradient(const SpectralState& s) {
  std::vector<Complex> g(s.box().size());
  for (int idx = 0; idx < s.box().size(); ++idx) {
    const double w = s.box().weight(idx);
    g[idx] = kFourPi2 * w * w * std::conj(s.coeffs()[idx]);
  }
  return g;
}

std::vector<Complex> rhs_deterministic(const SpectralState& s) {
  const ModeBox& box = s.box();
  const auto& phi = s.coeffs();
  const int K = box.K();
  std::vector<Complex> out(box.size());
  for (int idx = 0; idx < box.size(); ++idx) {
    const auto [n, m] = box.mode(idx);
    Complex acc(0.0, s.c() * n);
    acc *= phi[idx];
    for (int p = -K; p <= K; ++p)
      for (int q = -K; q <= K; ++q) {
        const int a = n - p, b = m - q;
        if (!box.contains(a, b)) continue;
        const double k = static_cast<double>(m * p - n * q) * (a * a + b * b);
        if (k == 0.0) continue;
        acc += k * phi[box.index(a, b)] * phi[box.index(p, q)];
      }
    out[idx] = acc / box.weight(idx);
  }
  return out;
}

namespace {

std::vector<Complex> apply_operator(const SpectralState& s,
                                    const std::vector<Complex>& grad) {
  const CHMOperator op(s.K(), s.c());
  const int M = s.box().size();
  std::vector<Complex> out(M, Complex(0.0, 0.0));
  for (int i = 0; i < M; ++i) {
    Complex acc(0.0, 0.0);
    for (int j = 0; j < M; ++j) acc += op.entry(i, j, s.coeffs()) * grad[j];
    out[i] = acc;
  }
  return out;
}

}  // namespace

std::vector<Complex> rhs_operator(const SpectralState& s) {
  return apply_operator(s, hamiltonian_gradient(s));
}

std::vector<Complex> casimir_residual(const SpectralState& s) {
  return apply_operator(s, casimir_gradient(s));
}

IntegrationResult integrate_deterministic(SpectralState s, double dt,
                                          long steps, long record_every) {
  if (!(dt > 0.0) || !std::isfinite(dt * steps))
    throw std::invalid_argument("dt must be positive and dt*steps finite");
  if (steps < 0) throw std::invalid_argument("steps must be nonnegative");
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  const int M = s.box().size();
  IntegrationResult res{s, {}};
  auto record = [&](double t, const SpectralState& st) {
    res.series.push_back(
        {t, hamiltonian(st), casimir(st).value, st.reality_violation()});
  };
  s.enforce_reality();
  record(0.0, s);
  SpectralState tmp = s;
  auto axpy = [&](const SpectralState& base, const std::vector<Complex>& k,
                  double h) {
    for (int i = 0; i < M; ++i) tmp.coeffs()[i] = base.coeffs()[i] + h * k[i];
    return tmp;
  };
  for (long step = 1; step <= steps; ++step) {
    const auto k1 = rhs_deterministic(s);
    const auto k2 = rhs_deterministic(axpy(s, k1, 0.5 * dt));
    const auto k3 = rhs_deterministic(axpy(s, k2, 0.5 * dt));
    const auto k4 = rhs_deterministic(axpy(s, k3, dt));
    for (int i = 0; i < M; ++i)
      s.coeffs()[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    s.enforce_reality();
    for (const Complex& v : s.coeffs())
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) ||
          std::abs(v) > 1e12)
        throw NumericalError(fmt::format(
            "spectral integration blew up at t = {} (last good t = {})",
            step * dt, (step - 1) * dt));
    if (step % record_every == 0 || step == steps) record(step * dt, s);
  }
  res.state = s;
  return res;
}

double liouville_trace(const SpectralState& s) {
  const CHMOperator op(s.K(), s.c());
  const HamiltonianSystem sys = real_chart_system(s.K(), s.c());
  const Vector x = s.to_real();
  Matrix j;
  auto flow = [&](const Vector& y) {
    op.real_chart(y, j);
    return Vector(j * sys.hamiltonian.gradient(y));
  };
  double trace = 0.0;
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i]);
    xp[i] = x[i] + h;
    const double up = flow(xp)[i];
    xp[i] = x[i] - h;
    const double dn = flow(xp)[i];
    xp[i] = x[i];
    trace += (up - dn) / (2.0 * h);
  }
  return trace;
}

double alpha(ModeIndex k, double beta, double mu) {
  const double w = 1.0 + k.n * k.n + k.m * k.m;
  return 2.0 * kPi * kPi * w * (beta + mu * w);
}

namespace {
void check_integrable(int K, double beta, double mu) {
  if (!(beta >= 0.0) || !(mu >= 0.0))
    throw ConfigError("beta and mu must be nonnegative");
  if (beta == 0.0 && mu == 0.0)
    throw NumericalError("beta = mu = 0 gives a divergent partition function");
  if (K < 1) throw ConfigError("truncation K must be at least 1");
}
}  // namespace

PartitionFunction partition_function(int K, double beta, double mu) {
  check_integrable(K, beta, mu);
  const ModeBox box(K);
  PartitionFunction pf;
  const double a0 = alpha({0, 0}, beta, mu);
  pf.log_Z = 0.5 * std::log(kPi / a0);
  Complex lit = std::sqrt(kPi / a0);
  for (int r : box.representatives()) {
    const double a = alpha(box.mode(r), beta, mu);
    pf.log_Z += std::log(kPi / (2.0 * a));
    lit *= Complex(0.0, kPi / a);
  }
  pf.Z = std::exp(pf.log_Z);
  pf.literal = lit;
  return pf;
}

Matrix sample_equilibrium(int K, double beta, double mu, long count,
                          std::uint64_t seed) {
  check_integrable(K, beta, mu);
  const ModeBox box(K);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int n = box.real_dimension();
  Vector sd(n);
  sd[0] = std::sqrt(1.0 / (2.0 * alpha({0, 0}, beta, mu)));
  const auto& reps = box.representatives();
  for (std::size_t r = 0; r < reps.size(); ++r)
    sd[1 + 2 * r] = sd[2 + 2 * r] =
        std::sqrt(1.0 / (4.0 * alpha(box.mode(reps[r]), beta, mu)));
  Matrix out(n, count);
  for (long p = 0; p < count; ++p)
    for (int i = 0; i < n; ++i) out(i, p) = sd[i] * normal(rng);
  return out;
}

}  // namespace metriplex::chm
