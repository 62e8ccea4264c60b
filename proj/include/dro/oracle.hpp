#pragma once

#include <stdexcept>
#include <vector>

#include "dro/core.hpp"

namespace dro::oracle {

struct InfeasibleAmbiguity : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Worst-case evaluation data over finite per-region candidate supports.
/// Every sample atom of region i must appear in grids[i]; empty regions may
/// have any nonempty grid (their artificial atom is placed at the grid
/// maximizer of the objective).
struct FiniteInstance {
  core::PiecewiseObjective objective;
  std::vector<core::SampleSet> grids;
  core::NominalDistribution nominal;
  cones::OrderCone cone;
  double epsilon = 0.0;
  double rho = 0.0;
};

struct WorstCase {
  double value = 0.0;
  core::Vector weights;              // maximizing region weights p
  std::vector<core::Matrix> masses;  // per region: effective-count x |grid|
};

/// Maximizes the expected loss over the ambiguity set by brute force on the
/// candidate grids, via the exact lifted-mass linear program.
WorstCase worst_case_expectation(const core::Vector& x,
                                 const FiniteInstance& fi);

struct ArgminResult {
  int index = -1;
  core::Vector x;
  double value = 0.0;
};

/// Grid search over decisions: smallest worst-case value, ties to the lowest
/// index.
ArgminResult exhaustive_argmin(const std::vector<core::Vector>& x_grid,
                               const FiniteInstance& fi);

/// Product grid over a box: per coordinate, the box endpoints, every atom
/// coordinate, and `extra_per_axis` evenly spaced interior points.
core::SampleSet product_grid(const core::Box& box, const core::SampleSet& atoms,
                             int extra_per_axis = 0);

/// Finite relaxation of an instance on canonical product grids. For 1-norm
/// transport and affine pieces the worst case over each box region sits on
/// this grid, so the relaxation is exact.
FiniteInstance finite_relaxation(const core::Instance& instance,
                                 int extra_per_axis = 0);

}  // namespace dro::oracle
