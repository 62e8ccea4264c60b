#include "dro/reformulate.hpp"

#include <cmath>
#include <map>
#include <string>

namespace dro::reformulate {

namespace {

std::string idx1(const char* base, int i) {
  return std::string(base) + "[" + std::to_string(i) + "]";
}
std::string idx2(const char* base, int i, int j) {
  return idx1(base, i) + "[" + std::to_string(j) + "]";
}
std::string idx3(const char* base, int i, int j, int k) {
  return idx2(base, i, j) + "[" + std::to_string(k) + "]";
}
std::string idx4(const char* base, int i, int j, int k, int c) {
  return idx3(base, i, j, k) + "[" + std::to_string(c) + "]";
}

RowSense to_row_sense(core::Sense s) {
  switch (s) {
    case core::Sense::le: return RowSense::le;
    case core::Sense::ge: return RowSense::ge;
    default: return RowSense::eq;
  }
}

// Decision variables with bounds and linear constraints.
std::vector<int> add_decision(ConvexProgram& prog,
                              const core::DecisionSpec& decision) {
  std::vector<int> x(decision.dim());
  for (int c = 0; c < decision.dim(); ++c)
    x[c] = prog.add_variable(idx1("x", c), decision.bounds.lower(c),
                             decision.bounds.upper(c));
  int cnum = 0;
  for (const auto& con : decision.constraints) {
    std::vector<std::pair<int, double>> coeffs;
    for (int c = 0; c < decision.dim(); ++c)
      if (con.coeffs(c) != 0.0) coeffs.push_back({x[c], con.coeffs(c)});
    prog.add_row(coeffs, to_row_sense(con.sense), con.rhs,
                 idx1("decision", cnum++));
  }
  return x;
}

// Intercept contribution of piece k to a row of the form
//   lhs >= b_k(x) + (other terms).
// Affine intercepts land directly on the decision coefficients; quadratic
// ones go through a shared epigraph variable created on first use.
struct InterceptRef {
  std::vector<std::pair<int, double>> coeffs;  // to subtract from the row lhs
  double constant = 0.0;                       // moves to the rhs
};

class InterceptPool {
 public:
  InterceptPool(ConvexProgram& prog, const std::vector<int>& x)
      : prog_(prog), x_(x) {}

  InterceptRef ref(const core::Quadratic& intercept, const std::string& tag) {
    InterceptRef out;
    if (intercept.is_affine(1e-14)) {
      for (int c = 0; c < (int)x_.size(); ++c)
        if (intercept.linear(c) != 0.0)
          out.coeffs.push_back({x_[c], intercept.linear(c)});
      out.constant = intercept.constant;
      return out;
    }
    auto it = epigraph_.find(tag);
    int epi;
    if (it == epigraph_.end()) {
      epi = prog_.add_variable("bq" + tag, -ConvexProgram::kInf,
                               ConvexProgram::kInf);
      prog_.add_quadratic_epigraph(epi, x_, intercept.quad, intercept.linear,
                                   intercept.constant);
      epigraph_[tag] = epi;
    } else {
      epi = it->second;
    }
    out.coeffs.push_back({epi, 1.0});
    return out;
  }

 private:
  ConvexProgram& prog_;
  std::vector<int> x_;
  std::map<std::string, int> epigraph_;
};

// Appends -coeff for every intercept term (row has b_k(x) on the right).
void subtract_intercept(std::vector<std::pair<int, double>>& row,
                        const InterceptRef& ref) {
  for (auto [var, coef] : ref.coeffs) row.push_back({var, -coef});
}

}  // namespace

void BuiltProgram::fix_decision(const core::Vector& x0) {
  if ((int)x.size() != x0.size())
    throw std::invalid_argument("fix_decision: dimension mismatch");
  for (int c = 0; c < x0.size(); ++c) program.set_bounds(x[c], x0(c), x0(c));
}

core::Vector BuiltProgram::decision_of(const Solution& sol) const {
  core::Vector out(x.size());
  for (int c = 0; c < (int)x.size(); ++c) out(c) = sol.values[x[c]];
  return out;
}

double support_function_box(const core::Box& box, const core::Vector& v) {
  if (v.size() != box.dim())
    throw std::invalid_argument("support_function_box: dimension mismatch");
  double total = 0.0;
  for (int c = 0; c < v.size(); ++c) {
    if (v(c) == 0.0) continue;
    if (!std::isfinite(box.lower(c)) || !std::isfinite(box.upper(c)))
      throw std::invalid_argument(
          "support_function_box: unbounded box with nonzero direction");
    total += std::max(box.lower(c) * v(c), box.upper(c) * v(c));
  }
  return total;
}

std::optional<double> neg_conjugate_affine(const core::AffinePiece& piece,
                                           const core::Vector& x,
                                           const core::Vector& y) {
  core::Vector slope = piece.slope.value(x);
  if (y.size() != slope.size())
    throw std::invalid_argument("neg_conjugate_affine: dimension mismatch");
  if ((y + slope).lpNorm<Eigen::Infinity>() > 1e-10) return std::nullopt;
  return piece.intercept.value(x);
}

BuiltProgram build_program(const core::Instance& instance) {
  core::require_valid(instance);
  const auto& obj = instance.objective;
  if (obj.separable())
    throw std::invalid_argument(
        "build_program: objective is in separable form; use "
        "build_program_separable");

  const auto& scheme = instance.partition;
  const auto& nominal = instance.nominal;
  const auto& cone = instance.ambiguity.cone;
  const int regions = scheme.size();
  const int d = scheme.support.dim();
  const int pieces = (int)obj.pieces.size();

  BuiltProgram built;
  ConvexProgram& prog = built.program;

  built.x = add_decision(prog, instance.decision);
  built.lambda = prog.add_variable("lambda", 0.0, ConvexProgram::kInf);
  built.theta = prog.add_variable("theta", 0.0, ConvexProgram::kInf);
  built.eta =
      prog.add_variable("eta", -ConvexProgram::kInf, ConvexProgram::kInf);
  prog.set_objective_coeff(built.lambda, instance.ambiguity.rho);
  prog.set_objective_coeff(built.theta, instance.ambiguity.epsilon);
  prog.set_objective_coeff(built.eta, 1.0);

  built.s.resize(regions);
  built.mu.resize(regions);
  for (int i = 0; i < regions; ++i) {
    built.s[i] = prog.add_variable(idx1("s", i), -ConvexProgram::kInf,
                                   ConvexProgram::kInf);
    built.mu[i] = prog.add_variable(idx1("mu", i), 0.0, ConvexProgram::kInf);
    prog.set_objective_coeff(built.s[i], nominal.weights(i));
  }
  if (!cone.is_trivial()) {
    built.nu.resize(cone.rows());
    for (int r = 0; r < cone.rows(); ++r)
      built.nu[r] = prog.add_variable(idx1("nu", r), 0.0, ConvexProgram::kInf);
  }

  InterceptPool intercepts(prog, built.x);
  std::vector<InterceptRef> brefs(pieces);
  for (int k = 0; k < pieces; ++k)
    brefs[k] = intercepts.ref(obj.pieces[k].intercept, idx1("", k));

  for (int i = 0; i < regions; ++i) {
    const core::Box& region = scheme.regions[i];
    std::vector<std::pair<int, double>> srow;  // s_i = ... equality
    srow.push_back({built.s[i], 1.0});
    srow.push_back({built.mu[i], -1.0});
    srow.push_back({built.eta, 1.0});
    for (int r = 0; r < (int)built.nu.size(); ++r)
      if (cone.matrix(r, i) != 0.0)
        srow.push_back({built.nu[r], -cone.matrix(r, i)});

    if (nominal.is_empty_region(i)) {
      // No atoms: one shared epigraph value bounded by the region supremum
      // of every piece, linearised coordinate-wise.
      int ti = prog.add_variable(idx2("t", i, 0), -ConvexProgram::kInf,
                                 ConvexProgram::kInf);
      srow.push_back({ti, -1.0});
      for (int k = 0; k < pieces; ++k) {
        const auto& slope = obj.pieces[k].slope;
        std::vector<std::pair<int, double>> row;
        row.push_back({ti, 1.0});
        for (int c = 0; c < d; ++c) {
          int u = prog.add_variable(idx3("u", i, k, c), -ConvexProgram::kInf,
                                    ConvexProgram::kInf);
          row.push_back({u, -1.0});
          for (double bound : {region.lower(c), region.upper(c)}) {
            std::vector<std::pair<int, double>> urow;
            urow.push_back({u, 1.0});
            for (int m = 0; m < slope.in_dim(); ++m)
              if (slope.coef(c, m) != 0.0)
                urow.push_back({built.x[m], -bound * slope.coef(c, m)});
            prog.add_row(urow, RowSense::ge, bound * slope.offset(c),
                         idx4("sup", i, k, c, bound == region.lower(c) ? 0 : 1));
          }
        }
        subtract_intercept(row, brefs[k]);
        prog.add_row(row, RowSense::ge, brefs[k].constant,
                     idx3("empty", i, k, 0));
      }
    } else {
      const int ni = nominal.counts[i];
      const auto& atoms = nominal.atoms[i];
      for (int j = 0; j < ni; ++j) {
        int tij = prog.add_variable(idx2("t", i, j), -ConvexProgram::kInf,
                                    ConvexProgram::kInf);
        srow.push_back({tij, -1.0 / ni});
        for (int k = 0; k < pieces; ++k) {
          const auto& slope = obj.pieces[k].slope;
          std::vector<std::pair<int, double>> row;
          row.push_back({tij, 1.0});
          for (int c = 0; c < d; ++c) {
            int z = prog.add_variable(idx4("z", i, j, k, c),
                                      -ConvexProgram::kInf,
                                      ConvexProgram::kInf);
            int vp = prog.add_variable(idx4("vp", i, j, k, c), 0.0,
                                       ConvexProgram::kInf);
            int vm = prog.add_variable(idx4("vm", i, j, k, c), 0.0,
                                       ConvexProgram::kInf);
            // z - (vp - vm) = -a_k(x)_c
            std::vector<std::pair<int, double>> link;
            link.push_back({z, 1.0});
            link.push_back({vp, -1.0});
            link.push_back({vm, 1.0});
            for (int m = 0; m < slope.in_dim(); ++m)
              if (slope.coef(c, m) != 0.0)
                link.push_back({built.x[m], slope.coef(c, m)});
            prog.add_row(link, RowSense::eq, -slope.offset(c),
                         idx4("link", i, j, k, c));
            prog.add_row({{z, 1.0}, {built.theta, -1.0}}, RowSense::le, 0.0,
                         idx4("zu", i, j, k, c));
            prog.add_row({{z, -1.0}, {built.theta, -1.0}}, RowSense::le, 0.0,
                         idx4("zl", i, j, k, c));
            row.push_back({vp, -region.upper(c)});
            row.push_back({vm, region.lower(c)});
            if (atoms[j](c) != 0.0) row.push_back({z, atoms[j](c)});
          }
          subtract_intercept(row, brefs[k]);
          prog.add_row(row, RowSense::ge, brefs[k].constant,
                       idx3("pt", i, j, k));
        }
      }
    }
    prog.add_row(srow, RowSense::eq, 0.0, idx1("agg", i));
    prog.add_row({{built.s[i], 1.0}, {built.lambda, -1.0}}, RowSense::le, 0.0,
                 idx1("su", i));
    prog.add_row({{built.s[i], -1.0}, {built.lambda, -1.0}}, RowSense::le, 0.0,
                 idx1("sl", i));
  }
  return built;
}

BuiltProgram build_program_separable(const core::Instance& instance) {
  core::require_valid(instance);
  const auto& obj = instance.objective;
  if (!obj.separable())
    throw std::invalid_argument(
        "build_program_separable: objective has no blocks; use build_program");

  const auto& scheme = instance.partition;
  const auto& nominal = instance.nominal;
  const auto& cone = instance.ambiguity.cone;
  const int regions = scheme.size();
  const int d = scheme.support.dim();

  BuiltProgram built;
  ConvexProgram& prog = built.program;

  built.x = add_decision(prog, instance.decision);
  built.lambda = prog.add_variable("lambda", 0.0, ConvexProgram::kInf);
  built.theta = prog.add_variable("theta", 0.0, ConvexProgram::kInf);
  built.eta =
      prog.add_variable("eta", -ConvexProgram::kInf, ConvexProgram::kInf);
  prog.set_objective_coeff(built.lambda, instance.ambiguity.rho);
  prog.set_objective_coeff(built.theta, instance.ambiguity.epsilon);
  prog.set_objective_coeff(built.eta, 1.0);

  built.s.resize(regions);
  built.mu.resize(regions);
  for (int i = 0; i < regions; ++i) {
    built.s[i] = prog.add_variable(idx1("s", i), -ConvexProgram::kInf,
                                   ConvexProgram::kInf);
    built.mu[i] = prog.add_variable(idx1("mu", i), 0.0, ConvexProgram::kInf);
    prog.set_objective_coeff(built.s[i], nominal.weights(i));
  }
  if (!cone.is_trivial()) {
    built.nu.resize(cone.rows());
    for (int r = 0; r < cone.rows(); ++r)
      built.nu[r] = prog.add_variable(idx1("nu", r), 0.0, ConvexProgram::kInf);
  }

  InterceptPool intercepts(prog, built.x);
  // One epigraph pool entry per (block, piece) with a quadratic intercept.
  std::vector<std::vector<InterceptRef>> brefs(d);
  for (int l = 0; l < d; ++l) {
    brefs[l].resize(obj.blocks[l].size());
    for (int k = 0; k < (int)obj.blocks[l].size(); ++k)
      brefs[l][k] =
          intercepts.ref(obj.blocks[l][k].intercept, idx2("", l, k));
  }

  for (int i = 0; i < regions; ++i) {
    const core::Box& region = scheme.regions[i];
    std::vector<std::pair<int, double>> srow;
    srow.push_back({built.s[i], 1.0});
    srow.push_back({built.mu[i], -1.0});
    srow.push_back({built.eta, 1.0});
    for (int r = 0; r < (int)built.nu.size(); ++r)
      if (cone.matrix(r, i) != 0.0)
        srow.push_back({built.nu[r], -cone.matrix(r, i)});

    if (nominal.is_empty_region(i)) {
      for (int l = 0; l < d; ++l) {
        int wil = prog.add_variable(idx2("w", i, l), -ConvexProgram::kInf,
                                    ConvexProgram::kInf);
        srow.push_back({wil, -1.0});
        for (int k = 0; k < (int)obj.blocks[l].size(); ++k) {
          const auto& slope = obj.blocks[l][k].slope;  // 1 x nx map
          std::vector<std::pair<int, double>> row;
          row.push_back({wil, 1.0});
          int u = prog.add_variable(idx3("u", i, l, k), -ConvexProgram::kInf,
                                    ConvexProgram::kInf);
          row.push_back({u, -1.0});
          for (double bound : {region.lower(l), region.upper(l)}) {
            std::vector<std::pair<int, double>> urow;
            urow.push_back({u, 1.0});
            for (int m = 0; m < slope.in_dim(); ++m)
              if (slope.coef(0, m) != 0.0)
                urow.push_back({built.x[m], -bound * slope.coef(0, m)});
            prog.add_row(urow, RowSense::ge, bound * slope.offset(0),
                         idx4("sup", i, l, k, bound == region.lower(l) ? 0 : 1));
          }
          subtract_intercept(row, brefs[l][k]);
          prog.add_row(row, RowSense::ge, brefs[l][k].constant,
                       idx3("empty", i, l, k));
        }
      }
    } else {
      const int ni = nominal.counts[i];
      const auto& atoms = nominal.atoms[i];
      for (int j = 0; j < ni; ++j) {
        for (int l = 0; l < d; ++l) {
          int w = prog.add_variable(idx3("w", i, j, l), -ConvexProgram::kInf,
                                    ConvexProgram::kInf);
          srow.push_back({w, -1.0 / ni});
          for (int k = 0; k < (int)obj.blocks[l].size(); ++k) {
            const auto& slope = obj.blocks[l][k].slope;
            int z = prog.add_variable(idx4("z", i, j, l, k),
                                      -ConvexProgram::kInf,
                                      ConvexProgram::kInf);
            int vp = prog.add_variable(idx4("vp", i, j, l, k), 0.0,
                                       ConvexProgram::kInf);
            int vm = prog.add_variable(idx4("vm", i, j, l, k), 0.0,
                                       ConvexProgram::kInf);
            std::vector<std::pair<int, double>> link;
            link.push_back({z, 1.0});
            link.push_back({vp, -1.0});
            link.push_back({vm, 1.0});
            for (int m = 0; m < slope.in_dim(); ++m)
              if (slope.coef(0, m) != 0.0)
                link.push_back({built.x[m], slope.coef(0, m)});
            prog.add_row(link, RowSense::eq, -slope.offset(0),
                         idx4("link", i, j, l, k));
            prog.add_row({{z, 1.0}, {built.theta, -1.0}}, RowSense::le, 0.0,
                         idx4("zu", i, j, l, k));
            prog.add_row({{z, -1.0}, {built.theta, -1.0}}, RowSense::le, 0.0,
                         idx4("zl", i, j, l, k));
            std::vector<std::pair<int, double>> row;
            row.push_back({w, 1.0});
            row.push_back({vp, -region.upper(l)});
            row.push_back({vm, region.lower(l)});
            if (atoms[j](l) != 0.0) row.push_back({z, atoms[j](l)});
            subtract_intercept(row, brefs[l][k]);
            prog.add_row(row, RowSense::ge, brefs[l][k].constant,
                         idx4("pt", i, j, l, k));
          }
        }
      }
    }
    prog.add_row(srow, RowSense::eq, 0.0, idx1("agg", i));
    prog.add_row({{built.s[i], 1.0}, {built.lambda, -1.0}}, RowSense::le, 0.0,
                 idx1("su", i));
    prog.add_row({{built.s[i], -1.0}, {built.lambda, -1.0}}, RowSense::le, 0.0,
                 idx1("sl", i));
  }
  return built;
}

BuiltProgram reduce_saa(const core::SampleSet& samples,
                        const core::PiecewiseObjective& objective,
                        const core::DecisionSpec& decision) {
  const int n = (int)samples.size();
  if (n == 0) throw std::invalid_argument("reduce_saa: empty sample");
  for (const auto& xi : samples)
    if (xi.size() != objective.support_dim())
      throw std::invalid_argument("reduce_saa: sample dimension mismatch");

  BuiltProgram built;
  ConvexProgram& prog = built.program;
  built.x = add_decision(prog, decision);
  InterceptPool intercepts(prog, built.x);

  auto epigraph_rows = [&](int tvar, const std::vector<core::AffinePiece>& ps,
                           const core::Vector& xi, const std::string& tag) {
    int k = 0;
    for (const auto& piece : ps) {
      InterceptRef bref = intercepts.ref(piece.intercept, tag + "k" +
                                                              std::to_string(k));
      std::vector<std::pair<int, double>> row;
      row.push_back({tvar, 1.0});
      // t >= a_k(x) . xi + b_k(x): fold the slope term onto x coefficients.
      for (int m = 0; m < piece.slope.in_dim(); ++m) {
        double coef = 0.0;
        for (int c = 0; c < piece.slope.out_dim(); ++c)
          coef += piece.slope.coef(c, m) * xi(c);
        if (coef != 0.0) row.push_back({built.x[m], -coef});
      }
      double rhs = piece.slope.offset.dot(xi);
      subtract_intercept(row, bref);
      prog.add_row(row, RowSense::ge, rhs + bref.constant,
                   tag + "k" + std::to_string(k));
      ++k;
    }
  };

  if (objective.separable()) {
    const int d = objective.support_dim();
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < d; ++l) {
        int t = prog.add_variable(idx2("t", j, l), -ConvexProgram::kInf,
                                  ConvexProgram::kInf);
        prog.set_objective_coeff(t, 1.0 / n);
        core::Vector xil(1);
        xil(0) = samples[j](l);
        epigraph_rows(t, objective.blocks[l], xil, idx2("pt", j, l));
      }
    }
  } else {
    for (int j = 0; j < n; ++j) {
      int t = prog.add_variable(idx1("t", j), -ConvexProgram::kInf,
                                ConvexProgram::kInf);
      prog.set_objective_coeff(t, 1.0 / n);
      core::Vector xi = samples[j];
      epigraph_rows(t, objective.pieces, xi, idx1("pt", j));
    }
  }
  return built;
}

BuiltProgram reduce_drow(const core::SampleSet& samples,
                         const core::PiecewiseObjective& objective,
                         const core::DecisionSpec& decision, double epsilon,
                         const core::Box& support) {
  const int n = (int)samples.size();
  if (n == 0) throw std::invalid_argument("reduce_drow: empty sample");
  if (support.dim() != objective.support_dim())
    throw std::invalid_argument("reduce_drow: objective dimension mismatch");
  for (const auto& xi : samples)
    if (xi.size() != support.dim())
      throw std::invalid_argument("reduce_drow: sample dimension mismatch");
  if (!support.finite())
    throw std::invalid_argument("reduce_drow: support must be bounded");
  if (!(epsilon >= 0.0))
    throw std::invalid_argument("reduce_drow: epsilon must be nonnegative");
  for (int j = 0; j < n; ++j)
    if (!support.contains(samples[j], 1e-9))
      throw std::invalid_argument("reduce_drow: sample " + std::to_string(j) +
                                  " outside the support");

  BuiltProgram built;
  ConvexProgram& prog = built.program;
  built.x = add_decision(prog, decision);
  built.theta = prog.add_variable("theta", 0.0, ConvexProgram::kInf);
  prog.set_objective_coeff(built.theta, epsilon);
  InterceptPool intercepts(prog, built.x);

  const int d = support.dim();
  auto add_point_rows = [&](int tvar, const core::AffinePiece& piece,
                            const core::Vector& xi, const core::Box& box,
                            const InterceptRef& bref, int j, int k) {
    const auto& slope = piece.slope;
    std::vector<std::pair<int, double>> row;
    row.push_back({tvar, 1.0});
    for (int c = 0; c < box.dim(); ++c) {
      int z = prog.add_variable(idx3("z", j, k, c), -ConvexProgram::kInf,
                                ConvexProgram::kInf);
      int vp = prog.add_variable(idx3("vp", j, k, c), 0.0, ConvexProgram::kInf);
      int vm = prog.add_variable(idx3("vm", j, k, c), 0.0, ConvexProgram::kInf);
      std::vector<std::pair<int, double>> link;
      link.push_back({z, 1.0});
      link.push_back({vp, -1.0});
      link.push_back({vm, 1.0});
      for (int m = 0; m < slope.in_dim(); ++m)
        if (slope.coef(c, m) != 0.0)
          link.push_back({built.x[m], slope.coef(c, m)});
      prog.add_row(link, RowSense::eq, -slope.offset(c),
                   idx3("link", j, k, c));
      prog.add_row({{z, 1.0}, {built.theta, -1.0}}, RowSense::le, 0.0,
                   idx3("zu", j, k, c));
      prog.add_row({{z, -1.0}, {built.theta, -1.0}}, RowSense::le, 0.0,
                   idx3("zl", j, k, c));
      row.push_back({vp, -box.upper(c)});
      row.push_back({vm, box.lower(c)});
      if (xi(c) != 0.0) row.push_back({z, xi(c)});
    }
    subtract_intercept(row, bref);
    prog.add_row(row, RowSense::ge, bref.constant, idx2("pt", j, k));
  };

  if (objective.separable()) {
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < d; ++l) {
        int t = prog.add_variable(idx2("t", j, l), -ConvexProgram::kInf,
                                  ConvexProgram::kInf);
        prog.set_objective_coeff(t, 1.0 / n);
        core::Box slice;
        slice.lower = core::Vector::Constant(1, support.lower(l));
        slice.upper = core::Vector::Constant(1, support.upper(l));
        core::Vector xil(1);
        xil(0) = samples[j](l);
        for (int k = 0; k < (int)objective.blocks[l].size(); ++k) {
          InterceptRef bref = intercepts.ref(objective.blocks[l][k].intercept,
                                             idx2("", l, k));
          add_point_rows(t, objective.blocks[l][k], xil, slice, bref,
                         j * d + l, k);
        }
      }
    }
  } else {
    std::vector<InterceptRef> brefs(objective.pieces.size());
    for (int k = 0; k < (int)objective.pieces.size(); ++k)
      brefs[k] = intercepts.ref(objective.pieces[k].intercept, idx1("", k));
    for (int j = 0; j < n; ++j) {
      int t = prog.add_variable(idx1("t", j), -ConvexProgram::kInf,
                                ConvexProgram::kInf);
      prog.set_objective_coeff(t, 1.0 / n);
      core::Vector xi = samples[j];
      for (int k = 0; k < (int)objective.pieces.size(); ++k)
        add_point_rows(t, objective.pieces[k], xi, support, brefs[k], j, k);
    }
  }
  return built;
}

double min_radius_feasible(const cones::OrderCone& cone,
                           const core::Vector& p_hat) {
  const int n = cone.dim();
  if (p_hat.size() != n)
    throw std::invalid_argument("min_radius_feasible: dimension mismatch");

  ConvexProgram prog;
  std::vector<int> p(n), dev(n);
  for (int i = 0; i < n; ++i)
    p[i] = prog.add_variable(idx1("p", i), 0.0, ConvexProgram::kInf);
  for (int i = 0; i < n; ++i) {
    dev[i] = prog.add_variable(idx1("d", i), 0.0, ConvexProgram::kInf);
    prog.set_objective_coeff(dev[i], 1.0);
    // |p_i - p_hat_i| <= d_i
    prog.add_row({{p[i], 1.0}, {dev[i], -1.0}}, RowSense::le, p_hat(i),
                 idx1("devu", i));
    prog.add_row({{p[i], -1.0}, {dev[i], -1.0}}, RowSense::le, -p_hat(i),
                 idx1("devl", i));
  }
  std::vector<std::pair<int, double>> sum;
  for (int i = 0; i < n; ++i) sum.push_back({p[i], 1.0});
  prog.add_row(sum, RowSense::eq, 1.0, "simplex");
  for (int r = 0; r < cone.rows(); ++r) {
    std::vector<std::pair<int, double>> row;
    for (int i = 0; i < n; ++i)
      if (cone.matrix(r, i) != 0.0) row.push_back({p[i], cone.matrix(r, i)});
    prog.add_row(row, RowSense::ge, 0.0, idx1("cone", r));
  }

  Solution sol = solve(prog);
  if (sol.status == SolveStatus::infeasible)
    throw InfeasiblePrior(
        "min_radius_feasible: the cone admits no probability vector");
  if (sol.status != SolveStatus::optimal)
    throw std::runtime_error("min_radius_feasible: solve failed: " +
                             sol.diagnostic);
  return std::max(0.0, sol.objective);
}

}  // namespace dro::reformulate
