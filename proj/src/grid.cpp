#include "llflow/grid.hpp"

#include <algorithm>
#include <cmath>

namespace llflow {

RadialGrid RadialGrid::geometric(double rmin, double rmax, std::size_t n) {
  require(rmin > 0.0 && rmax > rmin, "grid: need 0 < rmin < rmax");
  require(n >= 2, "grid: need at least 2 nodes");
  RadialGrid g;
  g.spacing_ = Spacing::Geometric;
  g.step_ = (std::log(rmax) - std::log(rmin)) / double(n - 1);
  g.nodes_.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    g.nodes_[i] = std::exp(std::log(rmin) + double(i) * g.step_);
  g.nodes_.front() = rmin;
  g.nodes_.back() = rmax;
  g.validate();
  return g;
}

RadialGrid RadialGrid::uniform(double rmin, double rmax, std::size_t n) {
  require(rmin > 0.0 && rmax > rmin, "grid: need 0 < rmin < rmax");
  require(n >= 2, "grid: need at least 2 nodes");
  RadialGrid g;
  g.spacing_ = Spacing::Uniform;
  g.step_ = (rmax - rmin) / double(n - 1);
  g.nodes_.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.nodes_[i] = rmin + double(i) * g.step_;
  g.nodes_.back() = rmax;
  g.validate();
  return g;
}

RadialGrid RadialGrid::from_nodes(RealVec nodes) {
  require(nodes.size() >= 2, "grid: need at least 2 nodes");
  RadialGrid g;
  g.nodes_ = std::move(nodes);
  // Infer the tag: constant ratio wins over constant difference.
  double ratio = g.nodes_[1] / g.nodes_[0];
  bool geo = true;
  for (std::size_t i = 1; i + 1 < g.nodes_.size() && geo; ++i)
    geo = std::abs(g.nodes_[i + 1] / g.nodes_[i] / ratio - 1.0) < 1e-12;
  if (geo) {
    g.spacing_ = Spacing::Geometric;
    g.step_ = std::log(ratio);
  } else {
    g.spacing_ = Spacing::Uniform;
    g.step_ = g.nodes_[1] - g.nodes_[0];
  }
  g.validate();
  return g;
}

void RadialGrid::validate() const {
  require(nodes_.front() > 0.0, "grid: nodes must be positive");
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
    require(nodes_[i] < nodes_[i + 1], "grid: nodes must be strictly increasing");
  if (spacing_ == Spacing::Geometric) {
    const double ratio = std::exp(step_);
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
      require(std::abs(nodes_[i + 1] / nodes_[i] / ratio - 1.0) < 1e-12,
              "grid: geometric ratio not constant");
    require(nodes_per_decade() >= 16, "grid: need >= 16 nodes per decade");
  } else {
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
      require(std::abs((nodes_[i + 1] - nodes_[i]) / step_ - 1.0) < 1e-10,
              "grid: uniform step not constant");
  }
}

std::size_t RadialGrid::nodes_per_decade() const {
  if (spacing_ != Spacing::Geometric) return 0;
  return std::size_t(std::floor(std::log(10.0) / step_)) + 1;
}

std::size_t RadialGrid::locate(double r) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
  if (it == nodes_.begin()) return 0;
  std::size_t i = std::size_t(it - nodes_.begin()) - 1;
  return std::min(i, nodes_.size() - 1);
}

}  // namespace llflow
