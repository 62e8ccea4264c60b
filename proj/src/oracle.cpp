#include "dro/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "dro/program.hpp"

namespace dro::oracle {

namespace {

double one_norm_distance(const core::Vector& a, const core::Vector& b) {
  return (a - b).lpNorm<1>();
}

void check_finite_instance(const FiniteInstance& fi) {
  const int regions = fi.nominal.regions();
  if ((int)fi.grids.size() != regions)
    throw std::invalid_argument("oracle: one grid per region required");
  if (fi.cone.dim() != regions)
    throw std::invalid_argument("oracle: cone dimension mismatch");
  if (!(fi.epsilon >= 0.0) || !(fi.rho >= 0.0))
    throw std::invalid_argument("oracle: budgets must be nonnegative");
  for (int i = 0; i < regions; ++i) {
    if (fi.grids[i].empty())
      throw std::invalid_argument("oracle: empty grid for region " +
                                  std::to_string(i));
    for (const auto& atom : fi.nominal.atoms[i]) {
      bool found = false;
      for (const auto& g : fi.grids[i])
        if ((g - atom).lpNorm<Eigen::Infinity>() <= 1e-12) {
          found = true;
          break;
        }
      if (!found)
        throw std::invalid_argument(
            "oracle: a sample atom of region " + std::to_string(i) +
            " is missing from its candidate grid");
    }
  }
}

}  // namespace

WorstCase worst_case_expectation(const core::Vector& x,
                                 const FiniteInstance& fi) {
  check_finite_instance(fi);
  using reformulate::ConvexProgram;
  using reformulate::RowSense;

  const int regions = fi.nominal.regions();

  // Objective values on the grids, and the artificial atom for empty
  // regions (the grid maximizer, ties to the lowest index).
  std::vector<std::vector<double>> fval(regions);
  std::vector<core::SampleSet> atoms(regions);
  for (int i = 0; i < regions; ++i) {
    fval[i].reserve(fi.grids[i].size());
    for (const auto& g : fi.grids[i])
      fval[i].push_back(fi.objective.value(x, g));
    if (fi.nominal.is_empty_region(i)) {
      int best = 0;
      for (int g = 1; g < (int)fval[i].size(); ++g)
        if (fval[i][g] > fval[i][best]) best = g;
      atoms[i].push_back(fi.grids[i][best]);
    } else {
      atoms[i] = fi.nominal.atoms[i];
    }
  }

  ConvexProgram prog;
  std::vector<int> p(regions), dplus(regions), dminus(regions);
  for (int i = 0; i < regions; ++i) {
    p[i] = prog.add_variable("p[" + std::to_string(i) + "]", 0.0,
                             ConvexProgram::kInf);
    dplus[i] = prog.add_variable("d+[" + std::to_string(i) + "]", 0.0,
                                 ConvexProgram::kInf);
    dminus[i] = prog.add_variable("d-[" + std::to_string(i) + "]", 0.0,
                                  ConvexProgram::kInf);
    // p - p_hat = d+ - d-
    prog.add_row({{p[i], 1.0}, {dplus[i], -1.0}, {dminus[i], 1.0}},
                 RowSense::eq, fi.nominal.weights(i),
                 "dev[" + std::to_string(i) + "]");
  }
  std::vector<std::pair<int, double>> radius;
  for (int i = 0; i < regions; ++i) {
    radius.push_back({dplus[i], 1.0});
    radius.push_back({dminus[i], 1.0});
  }
  prog.add_row(radius, RowSense::le, fi.rho, "radius");

  std::vector<std::pair<int, double>> simplex;
  for (int i = 0; i < regions; ++i) simplex.push_back({p[i], 1.0});
  prog.add_row(simplex, RowSense::eq, 1.0, "simplex");

  for (int r = 0; r < fi.cone.rows(); ++r) {
    std::vector<std::pair<int, double>> row;
    for (int i = 0; i < regions; ++i)
      if (fi.cone.matrix(r, i) != 0.0)
        row.push_back({p[i], fi.cone.matrix(r, i)});
    prog.add_row(row, RowSense::ge, 0.0, "cone[" + std::to_string(r) + "]");
  }

  // Lifted masses m[i][j][g] with marginal p_i per atom row and a shared
  // transport budget. Minimize the negated expectation.
  std::vector<std::vector<std::vector<int>>> m(regions);
  std::vector<std::pair<int, double>> budget;
  for (int i = 0; i < regions; ++i) {
    const int ni = (int)atoms[i].size();
    const int gi = (int)fi.grids[i].size();
    m[i].resize(ni);
    for (int j = 0; j < ni; ++j) {
      m[i][j].resize(gi);
      std::vector<std::pair<int, double>> marginal;
      for (int g = 0; g < gi; ++g) {
        int var = prog.add_variable(
            "m[" + std::to_string(i) + "][" + std::to_string(j) + "][" +
                std::to_string(g) + "]",
            0.0, ConvexProgram::kInf);
        m[i][j][g] = var;
        prog.add_objective_coeff(var, -fval[i][g] / ni);
        marginal.push_back({var, 1.0});
        double cost = one_norm_distance(fi.grids[i][g], atoms[i][j]);
        if (cost != 0.0) budget.push_back({var, cost / ni});
      }
      marginal.push_back({p[i], -1.0});
      prog.add_row(marginal, RowSense::eq, 0.0,
                   "marg[" + std::to_string(i) + "][" + std::to_string(j) +
                       "]");
    }
  }
  prog.add_row(budget, RowSense::le, fi.epsilon, "transport");

  reformulate::Solution sol = reformulate::solve(prog);
  if (sol.status == reformulate::SolveStatus::infeasible)
    throw InfeasibleAmbiguity(
        "worst_case_expectation: no admissible weight vector within the "
        "radius");
  if (sol.status != reformulate::SolveStatus::optimal)
    throw std::runtime_error("worst_case_expectation: solve failed: " +
                             sol.diagnostic);

  WorstCase out;
  out.value = -sol.objective;
  out.weights = core::Vector(regions);
  out.masses.resize(regions);
  for (int i = 0; i < regions; ++i) {
    out.weights(i) = sol.values[p[i]];
    const int ni = (int)atoms[i].size();
    const int gi = (int)fi.grids[i].size();
    out.masses[i] = core::Matrix(ni, gi);
    for (int j = 0; j < ni; ++j)
      for (int g = 0; g < gi; ++g) out.masses[i](j, g) = sol.values[m[i][j][g]];
  }
  return out;
}

ArgminResult exhaustive_argmin(const std::vector<core::Vector>& x_grid,
                               const FiniteInstance& fi) {
  if (x_grid.empty())
    throw std::invalid_argument("exhaustive_argmin: empty decision grid");
  ArgminResult best;
  for (int idx = 0; idx < (int)x_grid.size(); ++idx) {
    WorstCase wc = worst_case_expectation(x_grid[idx], fi);
    if (best.index < 0 || wc.value < best.value) {
      best.index = idx;
      best.x = x_grid[idx];
      best.value = wc.value;
    }
  }
  return best;
}

core::SampleSet product_grid(const core::Box& box, const core::SampleSet& atoms,
                             int extra_per_axis) {
  const int d = box.dim();
  if (!box.finite())
    throw std::invalid_argument("product_grid: box must be bounded");
  std::vector<std::vector<double>> axis(d);
  for (int c = 0; c < d; ++c) {
    std::set<double> vals{box.lower(c), box.upper(c)};
    for (const auto& a : atoms) {
      if (a.size() != d)
        throw std::invalid_argument("product_grid: atom dimension mismatch");
      vals.insert(std::min(std::max(a(c), box.lower(c)), box.upper(c)));
    }
    for (int e = 1; e <= extra_per_axis; ++e)
      vals.insert(box.lower(c) + (box.upper(c) - box.lower(c)) * e /
                                     (extra_per_axis + 1.0));
    axis[c].assign(vals.begin(), vals.end());
  }
  core::SampleSet grid;
  std::vector<size_t> cursor(d, 0);
  while (true) {
    core::Vector point(d);
    for (int c = 0; c < d; ++c) point(c) = axis[c][cursor[c]];
    grid.push_back(point);
    int c = 0;
    while (c < d && ++cursor[c] == axis[c].size()) cursor[c++] = 0;
    if (c == d) break;
  }
  return grid;
}

FiniteInstance finite_relaxation(const core::Instance& instance,
                                 int extra_per_axis) {
  core::require_valid(instance);
  FiniteInstance fi;
  fi.objective = instance.objective;
  fi.nominal = instance.nominal;
  fi.cone = instance.ambiguity.cone;
  fi.epsilon = instance.ambiguity.epsilon;
  fi.rho = instance.ambiguity.rho;
  fi.grids.resize(instance.partition.size());
  for (int i = 0; i < instance.partition.size(); ++i)
    fi.grids[i] = product_grid(instance.partition.regions[i],
                               instance.nominal.atoms[i], extra_per_axis);
  return fi;
}

}  // namespace dro::oracle
