#pragma once

#include "metriplex/poisson.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace metriplex {

/// x = (p, q), J = [[0, -1], [1, 0]], H = (p^2 + q^2) / 2.
HamiltonianSystem canonical_2d();

/// so(3) Lie-Poisson: J^{ij} = eps^{ijk} x_k, H = sum x_i^2 / (2 I_i),
/// Casimir |x|^2 / 2.
HamiltonianSystem rigid_body(const Eigen::Vector3d& inertia = {1.0, 2.0, 3.0});

/// Rigid body with J^{12} replaced by x^1 x^2; fails the Jacobi identity.
HamiltonianSystem corrupted_demo();

/// User-defined system from sparse polynomial term lists.  Only the upper
/// triangle of J is given; the lower triangle follows by antisymmetry.
HamiltonianSystem polynomial_system(const nlohmann::json& spec);
HamiltonianSystem load_polynomial_system(const std::string& path);

/// Replace the operator of a system, keeping H, Casimirs and measure.
HamiltonianSystem with_operator(const HamiltonianSystem& sys,
                                PoissonOperatorField op, std::string name);

struct SystemParams {
  int K = 2;
  double c = 0.0;
  std::string file;
};

class UnknownSystem : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

std::vector<std::string> system_names();
HamiltonianSystem make_system(const std::string& name,
                              const SystemParams& params = {});

}  // namespace metriplex
