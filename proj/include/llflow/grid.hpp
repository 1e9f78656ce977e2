#pragma once

#include <cmath>
#include <cstddef>

#include "llflow/util.hpp"

namespace llflow {

enum class Spacing { Uniform, Geometric };

// Radial grid with strictly increasing nodes > 0. Geometric grids keep a
// constant node ratio; most profile work happens on them because the
// constructions span many decades in radius.
class RadialGrid {
 public:
  RadialGrid() = default;

  static RadialGrid geometric(double rmin, double rmax, std::size_t n);
  static RadialGrid uniform(double rmin, double rmax, std::size_t n);
  // Takes ownership of explicit nodes; spacing tag inferred and verified.
  static RadialGrid from_nodes(RealVec nodes);

  const RealVec& nodes() const { return nodes_; }
  double operator[](std::size_t i) const { return nodes_[i]; }
  std::size_t size() const { return nodes_.size(); }
  double rmin() const { return nodes_.front(); }
  double rmax() const { return nodes_.back(); }
  Spacing spacing() const { return spacing_; }

  // Uniform step of the underlying coordinate: dr for uniform grids,
  // d(ln r) for geometric ones.
  double step() const { return step_; }

  std::size_t nodes_per_decade() const;

  // Index of the last node <= r (clamped to [0, size-1]).
  std::size_t locate(double r) const;

 private:
  RealVec nodes_;
  Spacing spacing_ = Spacing::Geometric;
  double step_ = 0.0;

  void validate() const;
};

}  // namespace llflow
