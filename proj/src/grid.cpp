#include "metriplex/grid.hpp"

#include <fmt/format.h>

#include <cmath>

namespace metriplex {

PhaseGrid::PhaseGrid(std::vector<Axis> axes, int min_cells)
    : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > 3)
    throw ConfigError("grids support 1 to 3 dimensions");
  strides_.assign(axes_.size(), 1);
  size_ = 1;
  volume_ = 1.0;
  for (int a = dimension() - 1; a >= 0; --a) {
    const Axis& ax = axes_[a];
    if (!std::isfinite(ax.min) || !std::isfinite(ax.max) || !(ax.min < ax.max))
      throw ConfigError(fmt::format("grid axis {}: need finite min < max", a));
    if (ax.cells < min_cells)
      throw ConfigError(
          fmt::format("grid axis {}: need at least {} cells", a, min_cells));
    strides_[a] = size_;
    size_ *= static_cast<std::size_t>(ax.cells);
    volume_ *= ax.width();
  }
}

void PhaseGrid::center(std::size_t idx, Vector& out) const {
  out.resize(dimension());
  for (int a = 0; a < dimension(); ++a)
    out[a] = axes_[a].center(coordinate(idx, a));
}

Vector PhaseGrid::center(std::size_t idx) const {
  Vector out;
  center(idx, out);
  return out;
}

std::optional<std::size_t> PhaseGrid::locate(const Vector& x) const {
  std::size_t idx = 0;
  for (int a = 0; a < dimension(); ++a) {
    const Axis& ax = axes_[a];
    if (!(x[a] >= ax.min) || !(x[a] < ax.max)) return std::nullopt;
    int i = static_cast<int>(std::floor((x[a] - ax.min) / ax.width()));
    if (i >= ax.cells) i = ax.cells - 1;
    idx += static_cast<std::size_t>(i) * strides_[a];
  }
  return idx;
}

nlohmann::json PhaseGrid::to_json() const {
  nlohmann::json j;
  for (const Axis& ax : axes_) {
    j["min"].push_back(ax.min);
    j["max"].push_back(ax.max);
    j["cells"].push_back(ax.cells);
  }
  j["cell_volume"] = volume_;
  j["layout"] = "cell-centred, row-major, last axis fastest";
  return j;
}

double GridDistribution::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

void GridDistribution::validate() const {
  if (values.size() != grid.size())
    throw std::invalid_argument("distribution size does not match its grid");
  for (double v : values)
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("distribution must be finite and nonnegative");
  const double m = mass();
  if (std::abs(m - 1.0) > 1e-12)
    throw std::invalid_argument(
        fmt::format("distribution mass {:.15g} is not 1", m));
}

}  // namespace metriplex
