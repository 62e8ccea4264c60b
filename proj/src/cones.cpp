#include "dro/cones.hpp"

#include <cmath>
#include <stdexcept>

namespace dro::cones {

namespace {

void check_dim(int n) {
  if (n < 1) throw std::invalid_argument("order cone: dimension must be >= 1");
}

}  // namespace

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::trivial: return "trivial";
    case Kind::simple: return "simple";
    case Kind::tree: return "tree";
    case Kind::star: return "star";
    case Kind::umbrella: return "umbrella";
    case Kind::ratio: return "ratio";
    case Kind::custom: return "custom";
  }
  return "custom";
}

OrderCone trivial_cone(int n) {
  check_dim(n);
  OrderCone c;
  c.kind = Kind::trivial;
  c.matrix = Eigen::MatrixXd::Zero(0, n);
  return c;
}

OrderCone simple_order(int n) {
  check_dim(n);
  OrderCone c;
  c.kind = Kind::simple;
  c.matrix = Eigen::MatrixXd::Zero(n - 1, n);
  for (int i = 0; i + 1 < n; ++i) {
    c.matrix(i, i) = 1.0;
    c.matrix(i, i + 1) = -1.0;
  }
  return c;
}

OrderCone tree_order(int n) {
  check_dim(n);
  OrderCone c;
  c.kind = Kind::tree;
  c.matrix = Eigen::MatrixXd::Zero(n - 1, n);
  for (int i = 0; i + 1 < n; ++i) {
    c.matrix(i, i) = 1.0;
    c.matrix(i, n - 1) = -1.0;
  }
  return c;
}

OrderCone star_shaped(int n) {
  check_dim(n);
  OrderCone c;
  c.kind = Kind::star;
  c.matrix = Eigen::MatrixXd::Zero(n - 1, n);
  for (int j = 1; j < n; ++j) {
    // (j+1) sum_{i<=j} p_i - j sum_{i<=j+1} p_i, with 1-based j
    for (int i = 0; i < j; ++i) c.matrix(j - 1, i) = 1.0;
    c.matrix(j - 1, j) = -static_cast<double>(j);
  }
  return c;
}

OrderCone umbrella(int n, int mode) {
  check_dim(n);
  if (mode < 1 || mode > n)
    throw std::invalid_argument("umbrella: mode must lie in [1, n]");
  OrderCone c;
  c.kind = Kind::umbrella;
  c.matrix = Eigen::MatrixXd::Zero(n - 1, n);
  for (int i = 0; i + 1 < n; ++i) {
    if (i + 1 < mode) {  // rising side: p_{i+1} >= p_i
      c.matrix(i, i) = -1.0;
      c.matrix(i, i + 1) = 1.0;
    } else {  // falling side: p_i >= p_{i+1}
      c.matrix(i, i) = 1.0;
      c.matrix(i, i + 1) = -1.0;
    }
  }
  return c;
}

OrderCone ratio_cone(const std::vector<double>& ratios, double tolerance) {
  const int n = static_cast<int>(ratios.size()) + 1;
  check_dim(n);
  if (tolerance < 0.0)
    throw std::invalid_argument("ratio cone: tolerance must be >= 0");
  OrderCone c;
  c.kind = Kind::ratio;
  c.matrix = Eigen::MatrixXd::Zero(n - 1, n);
  for (int i = 0; i + 1 < n; ++i) {
    if (!std::isfinite(ratios[i]))
      throw std::invalid_argument("ratio cone: ratios must be finite");
    c.matrix(i, i) = 1.0;
    c.matrix(i, i + 1) = -(ratios[i] - tolerance);
  }
  return c;
}

OrderCone permute(const OrderCone& cone, const std::vector<int>& perm) {
  const int n = cone.dim();
  if (static_cast<int>(perm.size()) != n)
    throw std::invalid_argument("permute: size mismatch");
  std::vector<bool> seen(n, false);
  bool identity = true;
  for (int k = 0; k < n; ++k) {
    const int j = perm[k];
    if (j < 0 || j >= n || seen[j])
      throw std::invalid_argument("permute: not a permutation");
    seen[j] = true;
    if (j != k) identity = false;
  }
  OrderCone out;
  out.kind = identity ? cone.kind : Kind::custom;
  out.matrix = Eigen::MatrixXd::Zero(cone.rows(), n);
  for (int k = 0; k < n; ++k) out.matrix.col(perm[k]) = cone.matrix.col(k);
  return out;
}

bool contains(const OrderCone& cone, const Eigen::VectorXd& p, double tol) {
  if (p.size() != cone.dim())
    throw std::invalid_argument("contains: dimension mismatch");
  if (cone.is_trivial()) return true;
  return ((cone.matrix * p).array() >= -tol).all();
}

Eigen::VectorXd dual_element(const OrderCone& cone,
                             const Eigen::VectorXd& nu) {
  if (nu.size() != cone.rows())
    throw std::invalid_argument("dual_element: multiplier size mismatch");
  if ((nu.array() < 0.0).any())
    throw std::invalid_argument("dual_element: multipliers must be >= 0");
  if (cone.is_trivial()) return Eigen::VectorXd::Zero(cone.dim());
  return cone.matrix.transpose() * nu;
}

}  // namespace dro::cones
