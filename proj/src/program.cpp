#include "dro/program.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dro::reformulate {

namespace {

void check_var(int var, int n, const char* what) {
  if (var < 0 || var >= n)
    throw std::out_of_range(std::string(what) + ": variable index " +
                            std::to_string(var) + " out of range");
}

}  // namespace

int ConvexProgram::add_variable(const std::string& name, double lo,
                                double hi) {
  if (std::isnan(lo) || std::isnan(hi) || lo > hi)
    throw std::invalid_argument("add_variable: bad bounds for " + name);
  const int idx = num_variables();
  names.push_back(name);
  lower.push_back(lo);
  upper.push_back(hi);
  objective.push_back(0.0);
  return idx;
}

void ConvexProgram::set_bounds(int var, double lo, double hi) {
  check_var(var, num_variables(), "set_bounds");
  if (std::isnan(lo) || std::isnan(hi) || lo > hi)
    throw std::invalid_argument("set_bounds: bad bounds");
  lower[var] = lo;
  upper[var] = hi;
}

void ConvexProgram::tighten_lower(int var, double lo) {
  check_var(var, num_variables(), "tighten_lower");
  lower[var] = std::max(lower[var], lo);
}

void ConvexProgram::tighten_upper(int var, double hi) {
  check_var(var, num_variables(), "tighten_upper");
  upper[var] = std::min(upper[var], hi);
}

int ConvexProgram::add_row(std::vector<std::pair<int, double>> coeffs,
                           RowSense sense, double rhs, std::string name) {
  std::map<int, double> merged;
  for (const auto& [var, coef] : coeffs) {
    check_var(var, num_variables(), "add_row");
    merged[var] += coef;
  }
  Row row;
  row.coeffs.assign(merged.begin(), merged.end());
  row.sense = sense;
  row.rhs = rhs;
  row.name = std::move(name);
  rows.push_back(std::move(row));
  return num_rows() - 1;
}

int ConvexProgram::add_quadratic_epigraph(int epi, const std::vector<int>& xs,
                                          const Eigen::MatrixXd& P,
                                          const Eigen::VectorXd& lin,
                                          double constant, std::string name) {
  check_var(epi, num_variables(), "add_quadratic_epigraph");
  const int k = static_cast<int>(xs.size());
  if (P.rows() != k || P.cols() != k || lin.size() != k)
    throw std::invalid_argument("add_quadratic_epigraph: shape mismatch");
  for (int v : xs) check_var(v, num_variables(), "add_quadratic_epigraph");

  QuadTerm term;
  term.vars = xs;
  term.P = 0.5 * (P + P.transpose());
  quads.push_back(std::move(term));

  std::vector<std::pair<int, double>> coeffs;
  coeffs.reserve(xs.size() + 1);
  for (int j = 0; j < k; ++j) coeffs.emplace_back(xs[j], lin(j));
  coeffs.emplace_back(epi, -1.0);
  const int row = add_row(std::move(coeffs), RowSense::le, -constant,
                          std::move(name));
  rows[row].quad = static_cast<int>(quads.size()) - 1;
  return row;
}

void ConvexProgram::set_objective_coeff(int var, double coeff) {
  check_var(var, num_variables(), "set_objective_coeff");
  objective[var] = coeff;
}

void ConvexProgram::add_objective_coeff(int var, double coeff) {
  check_var(var, num_variables(), "add_objective_coeff");
  objective[var] += coeff;
}

double ConvexProgram::row_value(int r, const Eigen::VectorXd& w) const {
  const Row& row = rows[r];
  double v = 0.0;
  for (const auto& [var, coef] : row.coeffs) v += coef * w(var);
  if (row.quad >= 0) {
    const QuadTerm& q = quads[row.quad];
    Eigen::VectorXd sub(q.vars.size());
    for (std::size_t j = 0; j < q.vars.size(); ++j) sub(j) = w(q.vars[j]);
    v += sub.dot(q.P * sub);
  }
  return v;
}

double ConvexProgram::objective_value(const Eigen::VectorXd& w) const {
  double v = objective_constant;
  for (int j = 0; j < num_variables(); ++j) v += objective[j] * w(j);
  return v;
}

double ConvexProgram::feasibility_error(const Eigen::VectorXd& w) const {
  double err = 0.0;
  for (int j = 0; j < num_variables(); ++j) {
    if (std::isfinite(lower[j])) err = std::max(err, lower[j] - w(j));
    if (std::isfinite(upper[j])) err = std::max(err, w(j) - upper[j]);
  }
  for (int r = 0; r < num_rows(); ++r) {
    const double v = row_value(r, w);
    switch (rows[r].sense) {
      case RowSense::le: err = std::max(err, v - rows[r].rhs); break;
      case RowSense::ge: err = std::max(err, rows[r].rhs - v); break;
      case RowSense::eq: err = std::max(err, std::abs(v - rows[r].rhs)); break;
    }
  }
  return err;
}

std::string ConvexProgram::export_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "minimize\n  obj:";
  bool any = false;
  for (int j = 0; j < num_variables(); ++j) {
    if (objective[j] == 0.0) continue;
    os << (objective[j] >= 0 ? " + " : " - ") << std::abs(objective[j]) << " "
       << names[j];
    any = true;
  }
  if (objective_constant != 0.0 || !any)
    os << " + " << objective_constant;
  os << "\nsubject to\n";
  for (int r = 0; r < num_rows(); ++r) {
    const Row& row = rows[r];
    os << "  " << (row.name.empty() ? "r" + std::to_string(r) : row.name)
       << ":";
    for (const auto& [var, coef] : row.coeffs)
      os << (coef >= 0 ? " + " : " - ") << std::abs(coef) << " " << names[var];
    if (row.quad >= 0) {
      const QuadTerm& q = quads[row.quad];
      for (int a = 0; a < q.P.rows(); ++a)
        for (int b = a; b < q.P.cols(); ++b) {
          const double c = (a == b) ? q.P(a, b) : q.P(a, b) + q.P(b, a);
          if (c == 0.0) continue;
          os << (c >= 0 ? " + " : " - ") << std::abs(c) << " "
             << names[q.vars[a]] << "*" << names[q.vars[b]];
        }
    }
    switch (row.sense) {
      case RowSense::le: os << " <= "; break;
      case RowSense::ge: os << " >= "; break;
      case RowSense::eq: os << " = "; break;
    }
    os << row.rhs << "\n";
  }
  os << "bounds\n";
  for (int j = 0; j < num_variables(); ++j) {
    os << "  " << lower[j] << " <= " << names[j] << " <= " << upper[j]
       << "\n";
  }
  os << "end\n";
  return os.str();
}

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "numerical_failure";
}

}  // namespace dro::reformulate
