#pragma once

// Builders shared across the test suites.

#include <vector>

#include "dro/core.hpp"
#include "dro/partition.hpp"

namespace th {

using dro::core::AffineMap;
using dro::core::AffinePiece;
using dro::core::Box;
using dro::core::DecisionSpec;
using dro::core::Instance;
using dro::core::PiecewiseObjective;
using dro::core::Quadratic;
using dro::core::SampleSet;
using dro::core::Vector;

inline Vector vec(std::initializer_list<double> xs) {
  Vector v((int)xs.size());
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline Box box1(double lo, double hi) {
  Box b;
  b.lower = Vector::Constant(1, lo);
  b.upper = Vector::Constant(1, hi);
  return b;
}

inline Box box2(double lo0, double hi0, double lo1, double hi1) {
  Box b;
  b.lower = vec({lo0, lo1});
  b.upper = vec({hi0, hi1});
  return b;
}

inline DecisionSpec decision1(double lo, double hi) {
  DecisionSpec d;
  d.bounds = box1(lo, hi);
  return d;
}

// slope(x) = s_coef . x + s_off (scalar xi), intercept(x) = b_lin . x + b_const
inline AffinePiece piece1(double s_coef, double s_off, double b_lin,
                          double b_const) {
  AffinePiece p;
  p.slope.coef = dro::core::Matrix::Constant(1, 1, s_coef);
  p.slope.offset = Vector::Constant(1, s_off);
  p.intercept = Quadratic::affine(Vector::Constant(1, b_lin), b_const);
  return p;
}

// max(h(x - xi), b(xi - x)): scalar newsvendor holding/backlog cost
inline PiecewiseObjective newsvendor1(double h, double b) {
  PiecewiseObjective f;
  f.pieces.push_back(piece1(0.0, -h, h, 0.0));
  f.pieces.push_back(piece1(0.0, b, -b, 0.0));
  return f;
}

// (-x) xi + x^2: scalar market-clearing profit with quadratic production cost
inline PiecewiseObjective quadratic_single() {
  PiecewiseObjective f;
  AffinePiece p;
  p.slope.coef = dro::core::Matrix::Constant(1, 1, -1.0);
  p.slope.offset = Vector::Zero(1);
  p.intercept.quad = dro::core::Matrix::Constant(1, 1, 1.0);
  p.intercept.linear = Vector::Zero(1);
  p.intercept.constant = 0.0;
  f.pieces.push_back(p);
  return f;
}

// Interval support chopped into equal cells, no tree (box-scan classify).
inline dro::core::PartitionScheme interval_cells(double lo, double hi, int k) {
  dro::core::PartitionScheme scheme;
  scheme.support = box1(lo, hi);
  for (int i = 0; i < k; ++i) {
    double a = lo + (hi - lo) * i / k;
    double b = lo + (hi - lo) * (i + 1) / k;
    scheme.regions.push_back(box1(a, b));
  }
  return scheme;
}

inline SampleSet samples1(std::initializer_list<double> xs) {
  SampleSet s;
  for (double x : xs) s.push_back(Vector::Constant(1, x));
  return s;
}

inline Instance make_instance(const DecisionSpec& decision,
                              const PiecewiseObjective& objective,
                              const dro::core::PartitionScheme& scheme,
                              const SampleSet& samples, double epsilon,
                              double rho, const dro::cones::OrderCone& cone) {
  Instance inst;
  inst.decision = decision;
  inst.objective = objective;
  inst.partition = scheme;
  inst.nominal = dro::partition::build_nominal(samples, scheme);
  inst.ambiguity.epsilon = epsilon;
  inst.ambiguity.rho = rho;
  inst.ambiguity.cone = cone;
  return inst;
}

}  // namespace th

#include "dro/reformulate.hpp"
#include "dro/rng.hpp"

namespace th {

struct FixedInstance {
  Instance instance;  // decision pinned to x
  Vector x;
  double rho_min = 0.0;
};

/// Random small instance with the decision pinned, for oracle cross-checks.
/// dim is 1 or 2; when feasible is false the radius is pushed strictly below
/// the smallest admissible one (instances where that is impossible get a
/// feasible radius instead and feasible-like behavior).
inline FixedInstance random_fixed_instance(dro::rng::Stream& stream, int dim,
                                           bool feasible) {
  using dro::cones::OrderCone;

  Box support;
  support.lower = Vector(dim);
  support.upper = Vector(dim);
  for (int c = 0; c < dim; ++c) {
    support.lower(c) = stream.uniform(-1.0, 0.0);
    support.upper(c) = support.lower(c) + stream.uniform(0.5, 2.0);
  }

  const int regions = 1 + (int)stream.uniform_int(0, 2);
  dro::core::PartitionScheme scheme;
  scheme.support = support;
  double lo = support.lower(0), hi = support.upper(0);
  double prev = lo;
  for (int i = 0; i < regions; ++i) {
    double next = (i + 1 == regions)
                      ? hi
                      : lo + (hi - lo) * (i + stream.uniform(0.3, 0.7)) /
                                regions;
    Box cell = support;
    cell.lower(0) = prev;
    cell.upper(0) = next;
    scheme.regions.push_back(cell);
    prev = next;
  }

  const int total = 1 + (int)stream.uniform_int(0, 3 * regions - 1);
  SampleSet samples;
  bool crowd = stream.uniform() < 0.35;  // leaves some regions empty
  for (int s = 0; s < total; ++s) {
    int r = crowd ? 0 : (int)stream.uniform_int(0, regions - 1);
    Vector xi(dim);
    for (int c = 0; c < dim; ++c)
      xi(c) = stream.uniform(scheme.regions[r].lower(c),
                             scheme.regions[r].upper(c));
    samples.push_back(xi);
  }

  PiecewiseObjective f;
  const int pieces = 1 + (int)stream.uniform_int(0, 2);
  for (int k = 0; k < pieces; ++k) {
    AffinePiece piece;
    piece.slope.coef = dro::core::Matrix(dim, 1);
    piece.slope.offset = Vector(dim);
    for (int c = 0; c < dim; ++c) {
      piece.slope.coef(c, 0) = stream.uniform(-2.0, 2.0);
      piece.slope.offset(c) = stream.uniform(-2.0, 2.0);
    }
    piece.intercept =
        Quadratic::affine(Vector::Constant(1, stream.uniform(-1.0, 1.0)),
                          stream.uniform(-1.0, 1.0));
    if (stream.uniform() < 0.3) {
      piece.intercept.quad = dro::core::Matrix::Constant(
          1, 1, stream.uniform(0.0, 1.5));
    }
    f.pieces.push_back(piece);
  }

  OrderCone cone = dro::cones::trivial_cone(regions);
  if (regions >= 2) {
    switch (stream.uniform_int(0, 5)) {
      case 0: break;  // trivial
      case 1: cone = dro::cones::simple_order(regions); break;
      case 2: cone = dro::cones::tree_order(regions); break;
      case 3: cone = dro::cones::star_shaped(regions); break;
      case 4:
        cone = dro::cones::umbrella(
            regions, 1 + (int)stream.uniform_int(0, regions - 1));
        break;
      default: {
        std::vector<double> ratios(regions - 1);
        for (auto& r : ratios) r = stream.uniform(0.5, 2.5);
        cone = dro::cones::ratio_cone(ratios, 0.1);
        break;
      }
    }
  }

  FixedInstance out;
  out.x = Vector::Constant(1, stream.uniform(-1.0, 1.0));
  DecisionSpec decision;
  decision.bounds.lower = out.x;
  decision.bounds.upper = out.x;

  double epsilon = stream.uniform(0.0, 1.2);
  out.instance = make_instance(decision, f, scheme, samples, epsilon, 0.0,
                               cone);
  out.rho_min = dro::reformulate::min_radius_feasible(
      cone, out.instance.nominal.weights);
  if (feasible || out.rho_min < 0.05) {
    out.instance.ambiguity.rho = out.rho_min + stream.uniform(0.0, 1.0);
  } else {
    out.instance.ambiguity.rho =
        std::max(0.0, (out.rho_min - 0.05) * stream.uniform());
  }
  return out;
}

}  // namespace th
