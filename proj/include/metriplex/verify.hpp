#pragma once

#include "metriplex/brackets.hpp"
#include "metriplex/systems.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace metriplex {

struct VerifyOptions {
  int points = 100;
  std::uint64_t seed = 1;
  /// Run the macroscopic axiom suite for systems of dimension <= 3.
  bool axioms = true;
};

/// Identity checks for a registered system; "passed" summarises them.
nlohmann::json verify_system(const std::string& name, const SystemParams& params,
                             const VerifyOptions& options = {});
nlohmann::json verify_system(const HamiltonianSystem& sys,
                             const VerifyOptions& options = {});

struct BracketVerifyOptions {
  int cells = 64;
  double half_width = 5.0;
  double D = 0.2;
  int distributions = 3;
  int functionals = 5;
  std::uint64_t seed = 1;
};

/// Macroscopic axiom suite on a grid over [-w, w]^n with random Gaussian
/// distributions and random polynomial functionals.
brackets::AxiomReport verify_brackets(const HamiltonianSystem& sys,
                                      const BracketVerifyOptions& options = {});

/// Copy of sys whose operator has J^{ji} overwritten by J^{ij} (i < j).
HamiltonianSystem symmetrized(const HamiltonianSystem& sys);

}  // namespace metriplex
