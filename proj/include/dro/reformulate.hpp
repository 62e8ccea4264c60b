#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "dro/core.hpp"
#include "dro/program.hpp"

namespace dro::reformulate {

/// Emitted program plus the variable indices callers need to inspect or pin.
struct BuiltProgram {
  ConvexProgram program;
  std::vector<int> x;       // decision variables
  int lambda = -1;          // weight-budget multiplier (when present)
  int theta = -1;           // transport-budget multiplier (when present)
  int eta = -1;             // centering variable (when present)
  std::vector<int> s;       // per-region aggregate variables
  std::vector<int> mu;      // per-region nonnegative multipliers
  std::vector<int> nu;      // cone-row multipliers

  /// Pins the decision variables to a point (for inner worst-case values).
  void fix_decision(const core::Vector& x0);
  core::Vector decision_of(const Solution& sol) const;
};

/// S_box(v) = sum_c max(lower_c v_c, upper_c v_c).
double support_function_box(const core::Box& box, const core::Vector& v);

/// Conjugate of the negated affine piece at y, given the decision x: equals
/// the intercept value when y = -slope(x) (within 1e-10 per coordinate) and
/// is +infinity otherwise (signalled by an empty optional).
std::optional<double> neg_conjugate_affine(const core::AffinePiece& piece,
                                           const core::Vector& x,
                                           const core::Vector& y);

/// Dual reformulation for a joint max-of-affine-pieces objective over a
/// box-partitioned support with 1-norm transport and weight costs.
BuiltProgram build_program(const core::Instance& instance);

/// Separable variant: per-coordinate blocks over product regions.
BuiltProgram build_program_separable(const core::Instance& instance);

/// Empirical-average epigraph program (no ambiguity).
BuiltProgram reduce_saa(const core::SampleSet& samples,
                        const core::PiecewiseObjective& objective,
                        const core::DecisionSpec& decision);

/// Single-region transport-ball program with budget epsilon.
BuiltProgram reduce_drow(const core::SampleSet& samples,
                         const core::PiecewiseObjective& objective,
                         const core::DecisionSpec& decision, double epsilon,
                         const core::Box& support);

struct InfeasiblePrior : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Smallest rho making the weight polytope nonempty:
/// min ||p - p_hat||_1 over the simplex intersected with the cone.
/// Throws InfeasiblePrior when the cone excludes every probability vector.
double min_radius_feasible(const cones::OrderCone& cone,
                           const core::Vector& p_hat);

}  // namespace dro::reformulate
