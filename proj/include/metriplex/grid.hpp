#pragma once

#include "metriplex/types.hpp"

#include <json.hpp>

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace metriplex {

struct Axis {
  double min = 0.0;
  double max = 1.0;
  int cells = 8;

  double width() const { return (max - min) / cells; }
  double center(int i) const { return min + (i + 0.5) * width(); }
};

/// Cell-centred rectangular grid, row-major with the last axis fastest.
class PhaseGrid {
 public:
  PhaseGrid() = default;
  /// min_cells guards the finite-volume solver; density grids may go lower.
  explicit PhaseGrid(std::vector<Axis> axes, int min_cells = 8);

  int dimension() const { return static_cast<int>(axes_.size()); }
  std::size_t size() const { return size_; }
  double cell_volume() const { return volume_; }
  const Axis& axis(int a) const { return axes_[a]; }
  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t stride(int a) const { return strides_[a]; }
  int coordinate(std::size_t idx, int a) const {
    return static_cast<int>((idx / strides_[a]) % axes_[a].cells);
  }
  void center(std::size_t idx, Vector& out) const;
  Vector center(std::size_t idx) const;
  /// Cell containing x, or nothing when x lies outside the box.
  std::optional<std::size_t> locate(const Vector& x) const;

  nlohmann::json to_json() const;

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  double volume_ = 0.0;
};

struct GridDistribution {
  PhaseGrid grid;
  std::vector<double> values;
  double time = 0.0;

  double mass() const;
  /// Throws unless values are finite, nonnegative and of mass 1 (1e-12).
  void validate() const;
};

}  // namespace metriplex
