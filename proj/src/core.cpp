#include "dro/core.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dro::core {

bool Box::contains(const Vector& v, double tol) const {
  if (v.size() != lower.size()) return false;
  for (int c = 0; c < v.size(); ++c) {
    if (v(c) < lower(c) - tol || v(c) > upper(c) + tol) return false;
  }
  return true;
}

bool Box::finite() const {
  return lower.allFinite() && upper.allFinite() &&
         lower.size() == upper.size();
}

double Quadratic::value(const Vector& x) const {
  double v = linear.dot(x) + constant;
  if (quad.size() > 0) v += x.dot(quad * x);
  return v;
}

bool Quadratic::is_affine(double tol) const {
  if (quad.size() == 0) return true;
  return quad.cwiseAbs().maxCoeff() <= tol;
}

Quadratic Quadratic::affine(const Vector& linear, double constant) {
  Quadratic q;
  q.quad = Matrix::Zero(linear.size(), linear.size());
  q.linear = linear;
  q.constant = constant;
  return q;
}

Quadratic Quadratic::zero(int dim) {
  return affine(Vector::Zero(dim), 0.0);
}

AffineMap AffineMap::constant(const Vector& offset, int in_dim) {
  AffineMap m;
  m.coef = Matrix::Zero(offset.size(), in_dim);
  m.offset = offset;
  return m;
}

double AffinePiece::value(const Vector& x, const Vector& xi) const {
  return slope.value(x).dot(xi) + intercept.value(x);
}

int PiecewiseObjective::support_dim() const {
  if (separable()) return static_cast<int>(blocks.size());
  if (pieces.empty()) return 0;
  return pieces.front().slope.out_dim();
}

int PiecewiseObjective::decision_dim() const {
  const AffinePiece* p = nullptr;
  if (separable()) {
    if (blocks.front().empty()) return 0;
    p = &blocks.front().front();
  } else {
    if (pieces.empty()) return 0;
    p = &pieces.front();
  }
  return p->intercept.dim();
}

double PiecewiseObjective::value(const Vector& x, const Vector& xi) const {
  if (separable()) {
    double total = 0.0;
    Vector coord(1);
    for (std::size_t l = 0; l < blocks.size(); ++l) {
      coord(0) = xi(static_cast<int>(l));
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& piece : blocks[l])
        best = std::max(best, piece.value(x, coord));
      total += best;
    }
    return total;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& piece : pieces) best = std::max(best, piece.value(x, xi));
  return best;
}

PiecewiseObjective as_joint(const PiecewiseObjective& separable) {
  if (!separable.separable() || separable.blocks.size() != 1)
    throw std::invalid_argument(
        "as_joint: requires a separable objective with exactly one block");
  PiecewiseObjective joint;
  joint.pieces = separable.blocks.front();
  return joint;
}

int PartitionScheme::classify(const Vector& xi) const {
  if (!tree.empty()) {
    int node = 0;
    while (!tree[node].leaf()) {
      const SplitNode& s = tree[node];
      node = (xi(s.feature) <= s.threshold) ? s.left : s.right;
    }
    return tree[node].region;
  }
  for (int i = 0; i < size(); ++i) {
    if (regions[i].contains(xi)) return i;
  }
  return -1;
}

int NominalDistribution::effective_count(int i) const {
  return counts[i] == 0 ? 1 : counts[i];
}

bool NominalDistribution::is_empty_region(int i) const {
  return counts[i] == 0;
}

namespace {

void add(std::vector<Violation>& out, const std::string& inv,
         const std::string& detail) {
  out.push_back({inv, detail});
}

bool symmetric_psd(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvalues().minCoeff() >= -tol * (1.0 + m.cwiseAbs().maxCoeff());
}

bool check_piece(const AffinePiece& p, int x_dim, int out_dim,
                 std::vector<Violation>& out, const std::string& where) {
  bool ok = true;
  if (p.slope.in_dim() != x_dim || p.slope.out_dim() != out_dim ||
      p.slope.coef.rows() != p.slope.offset.size()) {
    add(out, "objective-shape", where + ": slope map has wrong shape");
    ok = false;
  }
  if (p.intercept.dim() != x_dim ||
      p.intercept.quad.rows() != p.intercept.quad.cols() ||
      p.intercept.quad.rows() != x_dim) {
    add(out, "objective-shape", where + ": intercept has wrong shape");
    ok = false;
  } else if (!symmetric_psd(p.intercept.quad, 1e-9)) {
    add(out, "objective-convexity",
        where + ": intercept quadratic part is not symmetric PSD");
    ok = false;
  }
  return ok;
}

// Recompute leaf boxes from the split tree by clipping the support box and
// compare against the declared regions.
bool tree_matches_regions(const PartitionScheme& scheme, std::string* why) {
  const int n = static_cast<int>(scheme.tree.size());
  std::vector<char> leaf_seen(scheme.regions.size(), 0);
  struct Item {
    int node;
    Box box;
  };
  std::vector<Item> stack{{0, scheme.support}};
  int leaves = 0;
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    if (it.node < 0 || it.node >= n) {
      *why = "tree child index out of range";
      return false;
    }
    const SplitNode& s = scheme.tree[it.node];
    if (s.leaf()) {
      ++leaves;
      if (s.region >= static_cast<int>(scheme.regions.size()) ||
          leaf_seen[s.region]) {
        *why = "leaf region index invalid or duplicated";
        return false;
      }
      leaf_seen[s.region] = 1;
      const Box& declared = scheme.regions[s.region];
      if ((declared.lower - it.box.lower).cwiseAbs().maxCoeff() > 1e-12 ||
          (declared.upper - it.box.upper).cwiseAbs().maxCoeff() > 1e-12) {
        *why = "declared region box differs from tree-derived box";
        return false;
      }
      continue;
    }
    if (s.feature < 0 || s.feature >= scheme.support.dim()) {
      *why = "split feature out of range";
      return false;
    }
    if (s.threshold <= it.box.lower(s.feature) ||
        s.threshold >= it.box.upper(s.feature)) {
      *why = "split threshold outside the cell interior";
      return false;
    }
    Box left = it.box, right = it.box;
    left.upper(s.feature) = s.threshold;
    right.lower(s.feature) = s.threshold;
    stack.push_back({s.right, right});
    stack.push_back({s.left, left});
  }
  if (leaves != static_cast<int>(scheme.regions.size())) {
    *why = "leaf count differs from region count";
    return false;
  }
  return true;
}

bool boxes_overlap_interior(const Box& a, const Box& b) {
  for (int c = 0; c < a.dim(); ++c) {
    if (a.upper(c) <= b.lower(c) + 1e-15 || b.upper(c) <= a.lower(c) + 1e-15)
      return false;
  }
  return true;
}

}  // namespace

std::vector<Violation> validate_instance(const Instance& inst) {
  std::vector<Violation> out;

  const int x_dim = inst.decision.dim();
  if (x_dim < 1) add(out, "decision-dim", "decision dimension must be >= 1");
  if (inst.decision.bounds.upper.size() != x_dim)
    add(out, "decision-bounds", "bound vectors have mismatched sizes");
  else {
    for (int c = 0; c < x_dim; ++c) {
      const double lo = inst.decision.bounds.lower(c);
      const double hi = inst.decision.bounds.upper(c);
      if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
        add(out, "decision-bounds", "bounds are NaN or inverted");
        break;
      }
    }
  }
  for (const auto& row : inst.decision.constraints) {
    if (row.coeffs.size() != x_dim) {
      add(out, "decision-constraint", "row coefficient size mismatch");
      break;
    }
  }

  const auto& obj = inst.objective;
  const int d = inst.partition.support.dim();
  if (obj.pieces.empty() == obj.blocks.empty()) {
    add(out, "objective-form",
        "exactly one of joint pieces / separable blocks must be populated");
  } else if (!obj.separable()) {
    for (std::size_t k = 0; k < obj.pieces.size(); ++k)
      check_piece(obj.pieces[k], x_dim, d, out,
                  "piece " + std::to_string(k));
  } else {
    if (static_cast<int>(obj.blocks.size()) != d)
      add(out, "objective-shape",
          "separable block count differs from support dimension");
    for (std::size_t l = 0; l < obj.blocks.size(); ++l) {
      if (obj.blocks[l].empty()) {
        add(out, "objective-form",
            "block " + std::to_string(l) + " has no pieces");
        continue;
      }
      for (std::size_t k = 0; k < obj.blocks[l].size(); ++k)
        check_piece(obj.blocks[l][k], x_dim, 1, out,
                    "block " + std::to_string(l) + " piece " +
                        std::to_string(k));
    }
  }

  const auto& part = inst.partition;
  if (!part.support.finite() || part.support.dim() == 0)
    add(out, "support", "support box must be finite and non-empty");
  else if ((part.support.upper - part.support.lower).minCoeff() <= 0.0)
    add(out, "support", "support box must have positive width");
  if (part.size() < 1) add(out, "partition", "at least one region required");
  bool region_shapes_ok = true;
  for (const auto& region : part.regions) {
    if (region.dim() != part.support.dim() ||
        region.upper.size() != region.lower.size()) {
      add(out, "partition", "region box dimension mismatch");
      region_shapes_ok = false;
      break;
    }
  }
  if (region_shapes_ok && part.size() >= 1 && part.support.finite()) {
    if (!part.tree.empty()) {
      std::string why;
      if (!tree_matches_regions(part, &why))
        add(out, "partition-tree", why);
    } else {
      double vol = 0.0, support_vol = 1.0;
      for (int c = 0; c < part.support.dim(); ++c)
        support_vol *= part.support.upper(c) - part.support.lower(c);
      for (int i = 0; i < part.size(); ++i) {
        double v = 1.0;
        for (int c = 0; c < part.support.dim(); ++c) {
          v *= std::max(0.0, part.regions[i].upper(c) -
                                 part.regions[i].lower(c));
        }
        vol += v;
        if (!part.support.contains(part.regions[i].lower, 1e-12) ||
            !part.support.contains(part.regions[i].upper, 1e-12))
          add(out, "partition", "region extends outside the support");
        for (int j = 0; j < i; ++j) {
          if (boxes_overlap_interior(part.regions[i], part.regions[j]))
            add(out, "partition", "regions " + std::to_string(j) + " and " +
                                      std::to_string(i) + " overlap");
        }
      }
      if (std::abs(vol - support_vol) > 1e-9 * std::max(1.0, support_vol))
        add(out, "partition", "regions do not tile the support volume");
    }
  }

  const auto& nom = inst.nominal;
  const int k = part.size();
  if (nom.regions() != k || static_cast<int>(nom.counts.size()) != k ||
      static_cast<int>(nom.atoms.size()) != k) {
    add(out, "nominal-shape", "per-region arrays must match region count");
  } else {
    int total = 0, empties = 0;
    for (int i = 0; i < k; ++i) {
      total += nom.counts[i];
      if (nom.counts[i] == 0) ++empties;
      if (static_cast<int>(nom.atoms[i].size()) != nom.counts[i])
        add(out, "nominal-atoms",
            "region " + std::to_string(i) + " atom count != declared count");
      for (const auto& atom : nom.atoms[i]) {
        if (atom.size() != part.support.dim()) {
          add(out, "nominal-atoms", "atom dimension mismatch");
          break;
        }
        if (!part.regions.empty() && region_shapes_ok &&
            !part.regions[i].contains(atom, 1e-9)) {
          add(out, "nominal-atoms",
              "region " + std::to_string(i) + " holds an atom outside it");
          break;
        }
      }
    }
    if (total != nom.total_count)
      add(out, "nominal-count", "total_count differs from sum of counts");
    std::vector<int> expect_empty;
    for (int i = 0; i < k; ++i)
      if (nom.counts[i] == 0) expect_empty.push_back(i);
    if (expect_empty != nom.empty_regions)
      add(out, "nominal-empty",
          "empty_regions must list exactly the zero-count regions, sorted");
    const double denom = static_cast<double>(total + empties);
    if (denom > 0.0) {
      for (int i = 0; i < k; ++i) {
        const double expected = nom.effective_count(i) / denom;
        if (std::abs(nom.weights(i) - expected) > 1e-9) {
          add(out, "nominal-weights",
              "weights must equal effective counts over N + #empty");
          break;
        }
      }
    }
  }

  if (inst.ambiguity.epsilon < 0.0)
    add(out, "budget", "transport budget epsilon must be >= 0");
  if (inst.ambiguity.rho < 0.0)
    add(out, "budget", "weight budget rho must be >= 0");
  if (inst.ambiguity.cone.dim() != k)
    add(out, "cone", "order cone dimension must equal the region count");

  return out;
}

void require_valid(const Instance& inst) {
  const auto violations = validate_instance(inst);
  if (violations.empty()) return;
  std::ostringstream os;
  os << "invalid instance:";
  for (const auto& v : violations)
    os << " [" << v.invariant << "] " << v.detail << ";";
  throw std::invalid_argument(os.str());
}

}  // namespace dro::core
