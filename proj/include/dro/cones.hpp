#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace dro::cones {

enum class Kind { trivial, simple, tree, star, umbrella, ratio, custom };

/// Polyhedral order cone C = { p : matrix * p >= 0 }. A trivial cone has
/// zero rows and imposes nothing. The kind tag records which named family
/// built the matrix; permuting or hand-loading a matrix yields `custom`.
struct OrderCone {
  Kind kind = Kind::trivial;
  Eigen::MatrixXd matrix;  // rows() x dim(), may have 0 rows

  int dim() const { return static_cast<int>(matrix.cols()); }
  int rows() const { return static_cast<int>(matrix.rows()); }
  bool is_trivial() const { return matrix.rows() == 0; }
};

std::string kind_name(Kind k);

/// Full space: no rows.
OrderCone trivial_cone(int n);

/// Non-increasing weights: p_i - p_{i+1} >= 0 for i = 1..n-1.
OrderCone simple_order(int n);

/// Every weight dominates the last: p_i - p_n >= 0 for i = 1..n-1.
OrderCone tree_order(int n);

/// Non-increasing running averages, rows cleared of denominators:
/// (j+1) * sum_{i<=j} p_i - j * sum_{i<=j+1} p_i >= 0 for j = 1..n-1.
OrderCone star_shaped(int n);

/// Rises to the mode then falls; mode is 1-based in [1, n].
OrderCone umbrella(int n, int mode);

/// Ratio bounds between consecutive weights:
/// p_i - (ratios[i] - tolerance) * p_{i+1} >= 0 for i = 1..n-1.
/// `ratios` has n-1 entries; tolerance >= 0 slackens each bound.
OrderCone ratio_cone(const std::vector<double>& ratios, double tolerance);

/// Reindex the coordinates: the returned cone accepts p iff the vector
/// q with q_k = p[perm[k]] lies in `cone`. perm must be a permutation of
/// 0..n-1. Result kind is `custom` unless perm is the identity.
OrderCone permute(const OrderCone& cone, const std::vector<int>& perm);

/// Membership test with absolute slack tolerance on each row.
bool contains(const OrderCone& cone, const Eigen::VectorXd& p,
              double tol = 1e-10);

/// Element of the dual cone C* = { matrix^T nu : nu >= 0 }. Throws if any
/// multiplier is negative. For a trivial cone returns the zero vector.
Eigen::VectorXd dual_element(const OrderCone& cone, const Eigen::VectorXd& nu);

}  // namespace dro::cones
