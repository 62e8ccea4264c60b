#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dro/cones.hpp"

namespace dro::core {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SampleSet = std::vector<Vector>;

/// Axis-aligned box [lower, upper]. Support boxes must be finite; decision
/// boxes may use +-inf entries for one-sided or free coordinates.
struct Box {
  Vector lower;
  Vector upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vector& v, double tol = 0.0) const;
  bool finite() const;
};

/// q(x) = x' quad x + linear . x + constant; quad is symmetric PSD (possibly
/// zero, in which case the function is affine).
struct Quadratic {
  Matrix quad;
  Vector linear;
  double constant = 0.0;

  int dim() const { return static_cast<int>(linear.size()); }
  double value(const Vector& x) const;
  bool is_affine(double tol = 0.0) const;
  static Quadratic affine(const Vector& linear, double constant);
  static Quadratic zero(int dim);
};

/// y = coef * x + offset, mapping decisions to R^{rows(coef)}.
struct AffineMap {
  Matrix coef;    // out_dim x in_dim
  Vector offset;  // out_dim

  int in_dim() const { return static_cast<int>(coef.cols()); }
  int out_dim() const { return static_cast<int>(offset.size()); }
  Vector value(const Vector& x) const { return coef * x + offset; }
  static AffineMap constant(const Vector& offset, int in_dim);
};

/// One affine-in-xi piece g(x, xi) = slope(x) . xi + intercept(x), where
/// slope is affine in x and intercept is convex quadratic in x.
struct AffinePiece {
  AffineMap slope;      // x -> xi-coefficient vector
  Quadratic intercept;  // x -> scalar

  double value(const Vector& x, const Vector& xi) const;
};

/// Loss f(x, xi), either a joint max over pieces or a sum over coordinate
/// blocks of per-coordinate maxes. Exactly one of `pieces` / `blocks` is
/// populated.
struct PiecewiseObjective {
  std::vector<AffinePiece> pieces;               // f = max_k pieces[k]
  std::vector<std::vector<AffinePiece>> blocks;  // f = sum_l max_k blocks[l][k]

  bool separable() const { return !blocks.empty(); }
  int support_dim() const;
  int decision_dim() const;
  double value(const Vector& x, const Vector& xi) const;
};

/// Convert a one-block separable objective to joint form.
PiecewiseObjective as_joint(const PiecewiseObjective& separable);

enum class Sense { le, ge, eq };

struct LinearConstraint {
  Vector coeffs;
  Sense sense = Sense::le;
  double rhs = 0.0;
};

/// Feasible decision set: box bounds plus optional linear rows.
struct DecisionSpec {
  Box bounds;
  std::vector<LinearConstraint> constraints;

  int dim() const { return bounds.dim(); }
};

/// Binary axis-aligned split tree node. Leaves carry region >= 0; internal
/// nodes split on `feature <= threshold` (ties go left, hence to the lower
/// region index under in-order leaf labeling).
struct SplitNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int region = -1;

  bool leaf() const { return region >= 0; }
};

/// Partition of a finite support box into axis-aligned regions. When the
/// tree is empty classification falls back to the first region box that
/// contains the point.
struct PartitionScheme {
  Box support;
  std::vector<Box> regions;
  std::vector<SplitNode> tree;  // node 0 is the root when non-empty

  int size() const { return static_cast<int>(regions.size()); }
  int classify(const Vector& xi) const;
};

/// Empirical distribution split across partition regions. Regions that
/// received no sample are listed in empty_regions and get one artificial
/// unit of count; their atom list stays empty and downstream code treats
/// the missing atom symbolically.
struct NominalDistribution {
  Vector weights;                      // hat p, length = regions
  std::vector<SampleSet> atoms;        // per-region sample points
  std::vector<int> counts;             // per-region sample counts (0 if empty)
  std::vector<int> empty_regions;      // sorted region indices with count 0
  int total_count = 0;                 // raw sample size N

  int regions() const { return static_cast<int>(weights.size()); }
  /// N_i used in averages: the count, or 1 for an empty region.
  int effective_count(int i) const;
  bool is_empty_region(int i) const;
};

/// Ambiguity budgets: epsilon bounds the mixture of per-region transport
/// costs, rho bounds the weight perturbation in the 1-norm, and the cone
/// constrains admissible weight vectors.
struct AmbiguityParams {
  double epsilon = 0.0;
  double rho = 0.0;
  cones::OrderCone cone;
};

struct Instance {
  DecisionSpec decision;
  PiecewiseObjective objective;
  PartitionScheme partition;
  NominalDistribution nominal;
  AmbiguityParams ambiguity;
};

struct Violation {
  std::string invariant;
  std::string detail;
};

/// Structural checks: dimensions agree, boxes are ordered, the partition
/// tiles the support, nominal weights match counts, atoms classify into
/// their regions, budgets are nonnegative, cone dimension matches.
std::vector<Violation> validate_instance(const Instance& inst);

/// Throws std::invalid_argument listing all violations if any exist.
void require_valid(const Instance& inst);

}  // namespace dro::core
