#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace dro::reformulate {

enum class RowSense { le, ge, eq };

/// Sparse convex program
///   min  c . w + c0
///   s.t. per row: sum_j a_j w_j (+ ws' P ws for quadratic rows)  {<=,>=,=}  rhs
///        lower <= w <= upper
/// Quadratic terms are convex (P PSD) and only allowed on inequality rows.
struct ConvexProgram {
  struct QuadTerm {
    std::vector<int> vars;  // variables the dense block P acts on
    Eigen::MatrixXd P;      // symmetric PSD, adds vars' P vars to the row
  };
  struct Row {
    std::vector<std::pair<int, double>> coeffs;
    RowSense sense = RowSense::le;
    double rhs = 0.0;
    int quad = -1;  // index into quads, or -1
    std::string name;
  };

  static constexpr double kInf = std::numeric_limits<double>::infinity();

  /// Adds a variable and returns its index.
  int add_variable(const std::string& name, double lower = -kInf,
                   double upper = kInf);
  void set_bounds(int var, double lower, double upper);
  void tighten_lower(int var, double lower);
  void tighten_upper(int var, double upper);

  /// Adds a linear row; duplicate variable entries are summed.
  int add_row(std::vector<std::pair<int, double>> coeffs, RowSense sense,
              double rhs, std::string name = "");

  /// Adds the convex epigraph row  xs' P xs + lin . xs + constant <= epi.
  /// P is symmetrized; must be PSD.
  int add_quadratic_epigraph(int epi, const std::vector<int>& xs,
                             const Eigen::MatrixXd& P,
                             const Eigen::VectorXd& lin, double constant,
                             std::string name = "");

  void set_objective_coeff(int var, double coeff);
  void add_objective_coeff(int var, double coeff);
  void set_objective_constant(double c0) { objective_constant = c0; }

  int num_variables() const { return static_cast<int>(lower.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }
  const std::string& variable_name(int var) const { return names[var]; }

  /// Row activity at w (linear plus quadratic part), for diagnostics.
  double row_value(int row, const Eigen::VectorXd& w) const;
  double objective_value(const Eigen::VectorXd& w) const;

  /// Max violation of rows and bounds at w.
  double feasibility_error(const Eigen::VectorXd& w) const;

  /// Human-readable LP-format-like text dump.
  std::string export_text() const;

  std::vector<std::string> names;
  std::vector<double> objective;  // grown alongside variables
  double objective_constant = 0.0;
  std::vector<double> lower, upper;
  std::vector<Row> rows;
  std::vector<QuadTerm> quads;
};

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure };

std::string status_name(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::numerical_failure;
  double objective = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd values;       // primal point (or ray for unbounded)
  Eigen::VectorXd duals;        // per-row multipliers (optimal only)
  int iterations = 0;
  std::string diagnostic;       // certificate notes for non-optimal statuses

  double value_of(int var) const { return values(var); }
};

struct SolveOptions {
  double tol = 1e-10;         // target complementarity / residual scale
  double accept_tol = 1e-8;   // stalled iterates within this still count
  int max_iterations = 200;
  bool verbose = false;
};

/// Solves the program with the built-in interior-point method. Status is
/// always decided by certificates: infeasible programs report the phase-1
/// elastic objective, unbounded ones a recession direction.
Solution solve(const ConvexProgram& prog, const SolveOptions& opts = {});

}  // namespace dro::reformulate
