// Primal-dual interior-point backend for ConvexProgram.
//
// The program is presolved (fixed variables substituted out), rows are
// max-norm scaled and normalized to equalities plus <= inequalities, and a
// Mehrotra predictor-corrector iteration runs on the regularized
// quasidefinite augmented system
//
//   [ H + Dl + Du + dp*I   Je^T          Ji^T        ] [dw ]   [r1]
//   [ Je                   -dd*I         0           ] [dye] = [r2]
//   [ Ji                   0             -S/Y - dd*I ] [dyi]   [r3]
//
// factored with Eigen's simplicial LDLT. Convex quadratic terms are allowed
// on <= rows only; they contribute y_r * 2P to H and 2Pw to the row Jacobian.
// Non-optimal outcomes are certified by a phase-1 elastic program
// (infeasibility) and a recession-direction program (unboundedness).

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dro/program.hpp"

namespace dro::reformulate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Eigen::VectorXd;

struct Reduced {
  ConvexProgram prog;            // fixed variables substituted out
  std::vector<int> to_reduced;   // original var -> reduced index or -1
  std::vector<double> fixed_at;  // original var -> value when fixed
  std::vector<int> kept_rows;    // reduced row -> original row index
  bool infeasible = false;
  std::string why;
};

Reduced presolve(const ConvexProgram& in) {
  Reduced out;
  const int n = in.num_variables();
  out.to_reduced.assign(n, -1);
  out.fixed_at.assign(n, 0.0);

  for (int j = 0; j < n; ++j) {
    const double lo = in.lower[j], hi = in.upper[j];
    if (lo > hi) {
      out.infeasible = true;
      out.why = "variable " + in.names[j] + " has empty bound interval";
      return out;
    }
    if (std::isfinite(lo) && std::isfinite(hi) &&
        hi - lo <= 1e-13 * std::max(1.0, std::abs(lo))) {
      out.fixed_at[j] = 0.5 * (lo + hi);
    } else {
      out.to_reduced[j] =
          out.prog.add_variable(in.names[j], in.lower[j], in.upper[j]);
    }
  }

  double c0 = in.objective_constant;
  for (int j = 0; j < n; ++j) {
    if (out.to_reduced[j] >= 0)
      out.prog.set_objective_coeff(out.to_reduced[j], in.objective[j]);
    else
      c0 += in.objective[j] * out.fixed_at[j];
  }
  out.prog.set_objective_constant(c0);

  for (int orig_row = 0; orig_row < in.num_rows(); ++orig_row) {
    const auto& row = in.rows[orig_row];
    std::vector<std::pair<int, double>> coeffs;
    double rhs = row.rhs;
    for (const auto& [var, coef] : row.coeffs) {
      if (out.to_reduced[var] >= 0)
        coeffs.emplace_back(out.to_reduced[var], coef);
      else
        rhs -= coef * out.fixed_at[var];
    }
    int quad_idx = -1;
    if (row.quad >= 0) {
      const auto& q = in.quads[row.quad];
      std::vector<int> kept, dropped;
      for (int v : q.vars)
        (out.to_reduced[v] >= 0 ? kept : dropped).push_back(v);
      // constant part from fixed coordinates
      for (std::size_t a = 0; a < q.vars.size(); ++a)
        for (std::size_t b = 0; b < q.vars.size(); ++b) {
          if (out.to_reduced[q.vars[a]] < 0 && out.to_reduced[q.vars[b]] < 0)
            rhs -= q.P(a, b) * out.fixed_at[q.vars[a]] *
                   out.fixed_at[q.vars[b]];
        }
      // cross terms become linear coefficients on kept coordinates
      for (std::size_t a = 0; a < q.vars.size(); ++a) {
        if (out.to_reduced[q.vars[a]] < 0) continue;
        double lin = 0.0;
        for (std::size_t b = 0; b < q.vars.size(); ++b) {
          if (out.to_reduced[q.vars[b]] >= 0) continue;
          lin += 2.0 * q.P(a, b) * out.fixed_at[q.vars[b]];
        }
        if (lin != 0.0) coeffs.emplace_back(out.to_reduced[q.vars[a]], lin);
      }
      if (!kept.empty()) {
        ConvexProgram::QuadTerm term;
        term.vars.reserve(kept.size());
        Eigen::MatrixXd P(kept.size(), kept.size());
        std::vector<int> pos;
        for (std::size_t a = 0; a < q.vars.size(); ++a)
          if (out.to_reduced[q.vars[a]] >= 0) pos.push_back(a);
        for (std::size_t a = 0; a < pos.size(); ++a) {
          term.vars.push_back(out.to_reduced[q.vars[pos[a]]]);
          for (std::size_t b = 0; b < pos.size(); ++b)
            P(a, b) = q.P(pos[a], pos[b]);
        }
        if (P.cwiseAbs().maxCoeff() > 0.0) {
          term.P = P;
          out.prog.quads.push_back(std::move(term));
          quad_idx = static_cast<int>(out.prog.quads.size()) - 1;
        }
      }
    }
    if (coeffs.empty() && quad_idx < 0) {
      const double slack = 1e-9 * (1.0 + std::abs(rhs));
      bool ok = true;
      switch (row.sense) {
        case RowSense::le: ok = 0.0 <= rhs + slack; break;
        case RowSense::ge: ok = 0.0 >= rhs - slack; break;
        case RowSense::eq: ok = std::abs(rhs) <= slack; break;
      }
      if (!ok) {
        out.infeasible = true;
        out.why = "row " + (row.name.empty() ? "<anon>" : row.name) +
                  " is inconsistent after substituting fixed variables";
        return out;
      }
      continue;
    }
    const int r = out.prog.add_row(coeffs, row.sense, rhs, row.name);
    out.prog.rows[r].quad = quad_idx;
    out.kept_rows.push_back(orig_row);
  }
  return out;
}

// Normalized internal form: equality rows plus <= rows, each max-norm scaled.
struct Internal {
  int n = 0, me = 0, mi = 0;
  VectorXd c;
  double c0 = 0.0;
  VectorXd lo, hi;
  std::vector<std::vector<std::pair<int, double>>> ae, ai;
  VectorXd be, bi;
  std::vector<int> quad_of;  // per <= row: quad index or -1
  std::vector<ConvexProgram::QuadTerm> quads;  // scaled copies
  // report mapping: original row -> (eq? index, sign/scale)
  struct RowRef {
    bool ineq;
    int index;
    double dual_factor;  // original dual = dual_factor * internal multiplier
  };
  std::vector<RowRef> row_refs;
  double bnorm = 1.0, cnorm = 1.0;
};

Internal normalize(const ConvexProgram& p) {
  Internal f;
  f.n = p.num_variables();
  f.c = VectorXd::Zero(f.n);
  for (int j = 0; j < f.n; ++j) f.c(j) = p.objective[j];
  f.c0 = p.objective_constant;
  f.lo = VectorXd::Constant(f.n, -kInf);
  f.hi = VectorXd::Constant(f.n, kInf);
  for (int j = 0; j < f.n; ++j) {
    f.lo(j) = p.lower[j];
    f.hi(j) = p.upper[j];
  }

  std::vector<double> be_tmp, bi_tmp;
  for (const auto& row : p.rows) {
    double scale = 0.0;
    for (const auto& [var, coef] : row.coeffs)
      scale = std::max(scale, std::abs(coef));
    if (row.quad >= 0)
      scale = std::max(scale, 2.0 * p.quads[row.quad].P.cwiseAbs().maxCoeff());
    if (scale <= 0.0) scale = 1.0;
    scale = std::clamp(scale, 1e-8, 1e8);

    const bool flip = row.sense == RowSense::ge;
    if (row.quad >= 0 && row.sense != RowSense::le)
      throw std::logic_error("solver: quadratic terms require <= rows");

    std::vector<std::pair<int, double>> coeffs = row.coeffs;
    for (auto& [var, coef] : coeffs) coef = (flip ? -coef : coef) / scale;
    const double rhs = (flip ? -row.rhs : row.rhs) / scale;

    if (row.sense == RowSense::eq) {
      f.ae.push_back(std::move(coeffs));
      be_tmp.push_back(rhs);
      f.row_refs.push_back({false, static_cast<int>(f.ae.size()) - 1,
                            1.0 / scale});
    } else {
      int q = -1;
      if (row.quad >= 0) {
        ConvexProgram::QuadTerm term = p.quads[row.quad];
        term.P /= scale;
        f.quads.push_back(std::move(term));
        q = static_cast<int>(f.quads.size()) - 1;
      }
      f.ai.push_back(std::move(coeffs));
      bi_tmp.push_back(rhs);
      f.quad_of.push_back(q);
      f.row_refs.push_back({true, static_cast<int>(f.ai.size()) - 1,
                            (flip ? -1.0 : 1.0) / scale});
    }
  }
  f.me = static_cast<int>(f.ae.size());
  f.mi = static_cast<int>(f.ai.size());
  f.be = VectorXd::Zero(f.me);
  f.bi = VectorXd::Zero(f.mi);
  for (int r = 0; r < f.me; ++r) f.be(r) = be_tmp[r];
  for (int r = 0; r < f.mi; ++r) f.bi(r) = bi_tmp[r];
  for (int r = 0; r < f.me; ++r) f.bnorm = std::max(f.bnorm, std::abs(f.be(r)));
  for (int r = 0; r < f.mi; ++r) f.bnorm = std::max(f.bnorm, std::abs(f.bi(r)));
  f.cnorm = 1.0 + (f.n > 0 ? f.c.cwiseAbs().maxCoeff() : 0.0);
  return f;
}

enum class IpmOutcome { converged, acceptable, stalled, limit, failed };

struct IpmState {
  IpmOutcome outcome = IpmOutcome::failed;
  VectorXd w, ye, yi, zl, zu;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double quality = kInf;  // max of scaled residuals at the reported point
  int iterations = 0;
};

struct IpmParams {
  double tol = 1e-10;
  double accept = 1e-8;
  int max_iter = 200;
  double delta0 = 1e-9;
  bool verbose = false;
};

class Ipm {
 public:
  Ipm(const Internal& f, const IpmParams& prm) : f_(f), prm_(prm) {}

  IpmState run() {
    init_point();
    IpmState best;
    best.quality = kInf;
    double prev_best = kInf;
    int no_progress = 0;

    for (int it = 0; it <= prm_.max_iter; ++it) {
      compute_residuals();
      const double quality = std::max({rel_p_, rel_d_, rel_g_});
      if (quality < best.quality) {
        best.quality = quality;
        best.w = w_;
        best.ye = ye_;
        best.yi = yi_;
        best.zl = zl_;
        best.zu = zu_;
        best.iterations = it;
      }
      if (prm_.verbose)
        std::fprintf(stderr,
                     "ipm it=%3d obj=%+.9e pinf=%.2e dinf=%.2e gap=%.2e\n", it,
                     f_.c.dot(w_) + f_.c0, rel_p_, rel_d_, rel_g_);
      if (quality <= prm_.tol) {
        best.outcome = IpmOutcome::converged;
        break;
      }
      if (it == prm_.max_iter) {
        best.outcome = IpmOutcome::limit;
        break;
      }
      // divergence heuristics: let the driver certify what happened
      const double dual_mag =
          std::max({ye_.size() ? ye_.cwiseAbs().maxCoeff() : 0.0,
                    yi_.size() ? yi_.cwiseAbs().maxCoeff() : 0.0,
                    zl_.cwiseAbs().maxCoeff(), zu_.cwiseAbs().maxCoeff()});
      if (dual_mag > 1e13 * f_.cnorm && rel_p_ > prm_.tol) {
        best.outcome = IpmOutcome::stalled;
        break;
      }
      if (f_.c.dot(w_) < -1e13 * f_.cnorm && rel_p_ <= 1e-7) {
        best.outcome = IpmOutcome::stalled;
        break;
      }
      if (best.quality < prev_best * 0.7) {
        no_progress = 0;
        prev_best = best.quality;
      } else if (++no_progress >= 25) {
        best.outcome = IpmOutcome::stalled;
        break;
      }

      if (!iterate()) {
        best.outcome = IpmOutcome::failed;
        break;
      }
    }

    if (best.outcome != IpmOutcome::converged &&
        best.quality <= prm_.accept)
      best.outcome = IpmOutcome::acceptable;
    best.objective = f_.c.dot(best.w) + f_.c0;
    return best;
  }

 private:
  const Internal& f_;
  IpmParams prm_;

  VectorXd w_, ye_, yi_, s_, zl_, zu_;
  std::vector<char> has_lo_, has_hi_;
  int npairs_ = 0;
  VectorXd lo_, hi_;  // working bounds (artificial box when degenerate)

  // residuals
  VectorXd rd_, rpe_, rpi_;
  double rel_p_ = kInf, rel_d_ = kInf, rel_g_ = kInf, mu_ = 0.0, gap_ = 0.0;

  // factorization
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt_;
  SpMat kkt_;
  bool analyzed_ = false;
  double delta_p_ = 0.0, delta_d_ = 0.0;

  double row_value_i(int r, const VectorXd& w) const {
    double v = 0.0;
    for (const auto& [var, coef] : f_.ai[r]) v += coef * w(var);
    const int q = f_.quad_of[r];
    if (q >= 0) {
      const auto& qt = f_.quads[q];
      for (std::size_t a = 0; a < qt.vars.size(); ++a)
        for (std::size_t b = 0; b < qt.vars.size(); ++b)
          v += qt.P(a, b) * w(qt.vars[a]) * w(qt.vars[b]);
    }
    return v;
  }

  void init_point() {
    lo_ = f_.lo;
    hi_ = f_.hi;
    has_lo_.assign(f_.n, 0);
    has_hi_.assign(f_.n, 0);
    npairs_ = f_.mi;
    for (int j = 0; j < f_.n; ++j) {
      if (std::isfinite(lo_(j))) ++npairs_;
      if (std::isfinite(hi_(j))) ++npairs_;
    }
    if (npairs_ == 0) {
      // pure equality problem: box it so the barrier machinery applies
      lo_ = VectorXd::Constant(f_.n, -1e10);
      hi_ = VectorXd::Constant(f_.n, 1e10);
      npairs_ = 2 * f_.n;
    }
    for (int j = 0; j < f_.n; ++j) {
      has_lo_[j] = std::isfinite(lo_(j));
      has_hi_[j] = std::isfinite(hi_(j));
    }

    w_ = VectorXd::Zero(f_.n);
    for (int j = 0; j < f_.n; ++j) {
      if (has_lo_[j] && has_hi_[j])
        w_(j) = 0.5 * (lo_(j) + hi_(j));
      else if (has_lo_[j])
        w_(j) = lo_(j) + 1.0;
      else if (has_hi_[j])
        w_(j) = hi_(j) - 1.0;
    }
    ye_ = VectorXd::Zero(f_.me);
    yi_ = VectorXd::Ones(f_.mi);
    s_ = VectorXd::Ones(f_.mi);
    for (int r = 0; r < f_.mi; ++r)
      s_(r) = std::max(1.0, f_.bi(r) - row_value_i(r, w_));
    zl_ = VectorXd::Zero(f_.n);
    zu_ = VectorXd::Zero(f_.n);
    for (int j = 0; j < f_.n; ++j) {
      if (has_lo_[j]) zl_(j) = 1.0;
      if (has_hi_[j]) zu_(j) = 1.0;
    }
    delta_p_ = prm_.delta0;
    delta_d_ = prm_.delta0;
  }

  void compute_residuals() {
    rd_ = f_.c;
    for (int r = 0; r < f_.me; ++r)
      for (const auto& [var, coef] : f_.ae[r]) rd_(var) += coef * ye_(r);
    for (int r = 0; r < f_.mi; ++r) {
      for (const auto& [var, coef] : f_.ai[r]) rd_(var) += coef * yi_(r);
      const int q = f_.quad_of[r];
      if (q >= 0) {
        const auto& qt = f_.quads[q];
        Eigen::VectorXd sub(qt.vars.size());
        for (std::size_t a = 0; a < qt.vars.size(); ++a)
          sub(a) = w_(qt.vars[a]);
        const Eigen::VectorXd grad = 2.0 * (qt.P * sub);
        for (std::size_t a = 0; a < qt.vars.size(); ++a)
          rd_(qt.vars[a]) += grad(a) * yi_(r);
      }
    }
    rd_ -= zl_;
    rd_ += zu_;

    rpe_ = VectorXd::Zero(f_.me);
    for (int r = 0; r < f_.me; ++r) {
      double v = 0.0;
      for (const auto& [var, coef] : f_.ae[r]) v += coef * w_(var);
      rpe_(r) = v - f_.be(r);
    }
    rpi_ = VectorXd::Zero(f_.mi);
    for (int r = 0; r < f_.mi; ++r)
      rpi_(r) = row_value_i(r, w_) + s_(r) - f_.bi(r);

    gap_ = s_.dot(yi_);
    for (int j = 0; j < f_.n; ++j) {
      if (has_lo_[j]) gap_ += (w_(j) - lo_(j)) * zl_(j);
      if (has_hi_[j]) gap_ += (hi_(j) - w_(j)) * zu_(j);
    }
    mu_ = gap_ / std::max(1, npairs_);

    const double pe = f_.me ? rpe_.cwiseAbs().maxCoeff() : 0.0;
    const double pi = f_.mi ? rpi_.cwiseAbs().maxCoeff() : 0.0;
    rel_p_ = std::max(pe, pi) / f_.bnorm;
    rel_d_ = (f_.n ? rd_.cwiseAbs().maxCoeff() : 0.0) / f_.cnorm;
    rel_g_ = gap_ / (1.0 + std::abs(f_.c.dot(w_)));
  }

  void assemble(std::vector<Triplet>& trips) {
    trips.clear();
    const int n = f_.n, me = f_.me;
    for (int j = 0; j < n; ++j) {
      double d = delta_p_;
      if (has_lo_[j]) d += zl_(j) / (w_(j) - lo_(j));
      if (has_hi_[j]) d += zu_(j) / (hi_(j) - w_(j));
      trips.emplace_back(j, j, d);
    }
    for (int r = 0; r < f_.mi; ++r) {
      const int q = f_.quad_of[r];
      if (q < 0) continue;
      const auto& qt = f_.quads[q];
      const double y = std::max(yi_(r), 0.0);
      for (std::size_t a = 0; a < qt.vars.size(); ++a)
        for (std::size_t b = 0; b <= a; ++b) {
          const int va = qt.vars[a], vb = qt.vars[b];
          const double val = 2.0 * y * qt.P(a, b);
          trips.emplace_back(std::max(va, vb), std::min(va, vb), val);
        }
    }
    for (int r = 0; r < me; ++r) {
      for (const auto& [var, coef] : f_.ae[r])
        trips.emplace_back(n + r, var, coef);
      trips.emplace_back(n + r, n + r, -delta_d_);
    }
    for (int r = 0; r < f_.mi; ++r) {
      const int row = n + me + r;
      for (const auto& [var, coef] : f_.ai[r])
        trips.emplace_back(row, var, coef);
      const int q = f_.quad_of[r];
      if (q >= 0) {
        const auto& qt = f_.quads[q];
        Eigen::VectorXd sub(qt.vars.size());
        for (std::size_t a = 0; a < qt.vars.size(); ++a)
          sub(a) = w_(qt.vars[a]);
        const Eigen::VectorXd grad = 2.0 * (qt.P * sub);
        for (std::size_t a = 0; a < qt.vars.size(); ++a)
          trips.emplace_back(row, qt.vars[a], grad(a));
      }
      trips.emplace_back(row, row, -s_(r) / yi_(r) - delta_d_);
    }
  }

  bool factorize() {
    std::vector<Triplet> trips;
    for (int attempt = 0; attempt < 6; ++attempt) {
      assemble(trips);
      const int dim = f_.n + f_.me + f_.mi;
      kkt_.resize(dim, dim);
      kkt_.setFromTriplets(trips.begin(), trips.end());
      if (!analyzed_) {
        ldlt_.analyzePattern(kkt_);
        analyzed_ = true;
      }
      ldlt_.factorize(kkt_);
      if (ldlt_.info() == Eigen::Success) return true;
      delta_p_ *= 100.0;
      delta_d_ *= 100.0;
      analyzed_ = false;  // pattern unchanged, but be conservative
    }
    return false;
  }

  VectorXd solve_kkt(const VectorXd& rhs) {
    VectorXd sol = ldlt_.solve(rhs);
    for (int pass = 0; pass < 2; ++pass) {
      VectorXd resid =
          rhs - kkt_.selfadjointView<Eigen::Lower>() * sol;
      if (resid.cwiseAbs().maxCoeff() <=
          1e-11 * (1.0 + rhs.cwiseAbs().maxCoeff()))
        break;
      sol += ldlt_.solve(resid);
    }
    return sol;
  }

  struct Direction {
    VectorXd dw, dye, dyi, ds, dzl, dzu;
  };

  // Solve for a direction given complementarity targets. cl/cu/rc follow the
  // eliminated-block algebra documented at the top of the file.
  Direction direction(const VectorXd& cl, const VectorXd& cu,
                      const VectorXd& rc, const VectorXd& rpi_corr) {
    const int n = f_.n, me = f_.me, mi = f_.mi;
    VectorXd rhs(n + me + mi);
    VectorXd r1 = -rd_;
    r1 += cl;
    r1 -= cu;
    rhs.head(n) = r1;
    rhs.segment(n, me) = -rpe_;
    for (int r = 0; r < mi; ++r)
      rhs(n + me + r) = -rpi_corr(r) - rc(r) / yi_(r);

    const VectorXd sol = solve_kkt(rhs);

    Direction d;
    d.dw = sol.head(n);
    d.dye = sol.segment(n, me);
    d.dyi = sol.tail(mi);
    d.ds = VectorXd::Zero(mi);
    for (int r = 0; r < mi; ++r) {
      double jdw = 0.0;
      for (const auto& [var, coef] : f_.ai[r]) jdw += coef * d.dw(var);
      const int q = f_.quad_of[r];
      if (q >= 0) {
        const auto& qt = f_.quads[q];
        Eigen::VectorXd sub(qt.vars.size());
        for (std::size_t a = 0; a < qt.vars.size(); ++a)
          sub(a) = w_(qt.vars[a]);
        const Eigen::VectorXd grad = 2.0 * (qt.P * sub);
        for (std::size_t a = 0; a < qt.vars.size(); ++a)
          jdw += grad(a) * d.dw(qt.vars[a]);
      }
      d.ds(r) = -rpi_corr(r) - jdw;
    }
    d.dzl = VectorXd::Zero(n);
    d.dzu = VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (has_lo_[j])
        d.dzl(j) = cl(j) - (zl_(j) / (w_(j) - lo_(j))) * d.dw(j);
      if (has_hi_[j])
        d.dzu(j) = cu(j) + (zu_(j) / (hi_(j) - w_(j))) * d.dw(j);
    }
    return d;
  }

  // Largest step in [0, 1] keeping the named nonnegative quantities above
  // (1 - tau) of their current values.
  double primal_step(const Direction& d, double tau) const {
    double alpha = 1.0;
    for (int r = 0; r < f_.mi; ++r)
      if (d.ds(r) < 0.0) alpha = std::min(alpha, -tau * s_(r) / d.ds(r));
    for (int j = 0; j < f_.n; ++j) {
      if (has_lo_[j] && d.dw(j) < 0.0)
        alpha = std::min(alpha, -tau * (w_(j) - lo_(j)) / d.dw(j));
      if (has_hi_[j] && d.dw(j) > 0.0)
        alpha = std::min(alpha, tau * (hi_(j) - w_(j)) / d.dw(j));
    }
    return alpha;
  }

  double dual_step(const Direction& d, double tau) const {
    double alpha = 1.0;
    for (int r = 0; r < f_.mi; ++r)
      if (d.dyi(r) < 0.0) alpha = std::min(alpha, -tau * yi_(r) / d.dyi(r));
    for (int j = 0; j < f_.n; ++j) {
      if (has_lo_[j] && d.dzl(j) < 0.0)
        alpha = std::min(alpha, -tau * zl_(j) / d.dzl(j));
      if (has_hi_[j] && d.dzu(j) < 0.0)
        alpha = std::min(alpha, -tau * zu_(j) / d.dzu(j));
    }
    return alpha;
  }

  bool iterate() {
    if (!factorize()) return false;
    const int n = f_.n, mi = f_.mi;

    // affine scouting step
    VectorXd cl = VectorXd::Zero(n), cu = VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (has_lo_[j]) cl(j) = -zl_(j);
      if (has_hi_[j]) cu(j) = -zu_(j);
    }
    VectorXd rc(mi);
    for (int r = 0; r < mi; ++r) rc(r) = -s_(r) * yi_(r);
    const Direction aff = direction(cl, cu, rc, rpi_);

    const double ap_aff = primal_step(aff, 1.0);
    const double ad_aff = dual_step(aff, 1.0);

    double gap_aff = 0.0;
    for (int r = 0; r < mi; ++r)
      gap_aff += (s_(r) + ap_aff * aff.ds(r)) * (yi_(r) + ad_aff * aff.dyi(r));
    for (int j = 0; j < n; ++j) {
      if (has_lo_[j])
        gap_aff += (w_(j) + ap_aff * aff.dw(j) - lo_(j)) *
                   (zl_(j) + ad_aff * aff.dzl(j));
      if (has_hi_[j])
        gap_aff += (hi_(j) - w_(j) - ap_aff * aff.dw(j)) *
                   (zu_(j) + ad_aff * aff.dzu(j));
    }
    const double mu_aff = gap_aff / std::max(1, npairs_);
    double sigma = std::pow(std::max(mu_aff, 0.0) / std::max(mu_, 1e-300), 3);
    sigma = std::clamp(sigma, 1e-8, 1.0 - 1e-8);
    const double target = sigma * mu_;

    // corrected step
    for (int j = 0; j < n; ++j) {
      if (has_lo_[j])
        cl(j) = (target - aff.dw(j) * aff.dzl(j)) / (w_(j) - lo_(j)) - zl_(j);
      if (has_hi_[j])
        cu(j) = (target + aff.dw(j) * aff.dzu(j)) / (hi_(j) - w_(j)) - zu_(j);
    }
    for (int r = 0; r < mi; ++r)
      rc(r) = target - s_(r) * yi_(r) - aff.ds(r) * aff.dyi(r);
    // second-order primal correction for quadratic rows
    VectorXd rpi_corr = rpi_;
    for (int r = 0; r < mi; ++r) {
      const int q = f_.quad_of[r];
      if (q < 0) continue;
      const auto& qt = f_.quads[q];
      double curve = 0.0;
      for (std::size_t a = 0; a < qt.vars.size(); ++a)
        for (std::size_t b = 0; b < qt.vars.size(); ++b)
          curve += qt.P(a, b) * aff.dw(qt.vars[a]) * aff.dw(qt.vars[b]);
      rpi_corr(r) += curve;
    }
    const Direction dir = direction(cl, cu, rc, rpi_corr);

    const double tau = std::min(0.99995, std::max(0.995, 1.0 - mu_));
    double ap = primal_step(dir, tau);
    double ad = dual_step(dir, tau);
    if (ap <= 1e-13 && ad <= 1e-13) return false;

    w_ += ap * dir.dw;
    s_ += ap * dir.ds;
    ye_ += ad * dir.dye;
    yi_ += ad * dir.dyi;
    zl_ += ad * dir.dzl;
    zu_ += ad * dir.dzu;
    for (int r = 0; r < mi; ++r) {
      s_(r) = std::max(s_(r), 1e-300);
      yi_(r) = std::max(yi_(r), 1e-300);
    }
    return true;
  }
};

// Phase-1 elastic program: minimize total constraint relaxation mass.
ConvexProgram make_phase1(const ConvexProgram& p) {
  ConvexProgram out;
  for (int j = 0; j < p.num_variables(); ++j)
    out.add_variable(p.names[j], p.lower[j], p.upper[j]);
  out.quads = p.quads;
  for (const auto& row : p.rows) {
    ConvexProgram::Row copy = row;
    if (row.sense == RowSense::le || row.sense == RowSense::eq) {
      const int relax = out.add_variable("_relax_dn", 0.0, kInf);
      out.set_objective_coeff(relax, 1.0);
      copy.coeffs.emplace_back(relax, -1.0);
    }
    if (row.sense == RowSense::ge || row.sense == RowSense::eq) {
      const int relax = out.add_variable("_relax_up", 0.0, kInf);
      out.set_objective_coeff(relax, 1.0);
      copy.coeffs.emplace_back(relax, 1.0);
    }
    out.rows.push_back(std::move(copy));
  }
  return out;
}

// Recession program: certify an improving feasible direction.
ConvexProgram make_recession(const ConvexProgram& p) {
  ConvexProgram out;
  for (int j = 0; j < p.num_variables(); ++j) {
    const bool flo = std::isfinite(p.lower[j]);
    const bool fhi = std::isfinite(p.upper[j]);
    double lo = -1.0, hi = 1.0;
    if (flo && fhi) lo = hi = 0.0;
    else if (flo) lo = 0.0;
    else if (fhi) hi = 0.0;
    out.add_variable(p.names[j], lo, hi);
    out.set_objective_coeff(j, p.objective[j]);
  }
  for (const auto& row : p.rows) {
    std::vector<std::pair<int, double>> coeffs = row.coeffs;
    if (row.quad >= 0) {
      const auto& q = p.quads[row.quad];
      // directions must stay in the null space of the quadratic part
      for (int a = 0; a < q.P.rows(); ++a) {
        std::vector<std::pair<int, double>> nrow;
        for (int b = 0; b < q.P.cols(); ++b)
          if (q.P(a, b) != 0.0) nrow.emplace_back(q.vars[b], q.P(a, b));
        if (!nrow.empty()) out.add_row(nrow, RowSense::eq, 0.0);
      }
    }
    out.add_row(coeffs, row.sense, 0.0, row.name);
  }
  return out;
}

IpmState run_ipm(const ConvexProgram& p, const IpmParams& prm) {
  const Internal f = normalize(p);
  Ipm ipm(f, prm);
  IpmState st = ipm.run();
  return st;
}

}  // namespace

Solution solve(const ConvexProgram& prog, const SolveOptions& opts) {
  Solution sol;
  const int n_orig = prog.num_variables();

  const Reduced red = presolve(prog);
  if (red.infeasible) {
    sol.status = SolveStatus::infeasible;
    sol.diagnostic = red.why;
    return sol;
  }

  auto expand = [&](const VectorXd& w, bool zero_fixed) {
    VectorXd full(n_orig);
    for (int j = 0; j < n_orig; ++j)
      full(j) = red.to_reduced[j] >= 0
                    ? w(red.to_reduced[j])
                    : (zero_fixed ? 0.0 : red.fixed_at[j]);
    return full;
  };

  if (red.prog.num_variables() == 0) {
    VectorXd full = expand(VectorXd(), false);
    const double err = prog.feasibility_error(full);
    if (err <= 1e-8 * (1.0 + full.cwiseAbs().maxCoeff())) {
      sol.status = SolveStatus::optimal;
      sol.objective = prog.objective_value(full);
      sol.values = full;
      sol.duals = VectorXd::Zero(prog.num_rows());
    } else {
      sol.status = SolveStatus::infeasible;
      sol.diagnostic = "fixed variables violate a constraint by " +
                       std::to_string(err);
    }
    return sol;
  }

  IpmParams prm;
  prm.tol = opts.tol;
  prm.accept = opts.accept_tol;
  prm.max_iter = opts.max_iterations;
  prm.verbose = opts.verbose;

  const Internal f = normalize(red.prog);
  Ipm main_ipm(f, prm);
  IpmState st = main_ipm.run();
  sol.iterations = st.iterations;

  auto report_optimal = [&](const IpmState& state) {
    sol.status = SolveStatus::optimal;
    sol.values = expand(state.w, false);
    sol.objective = prog.objective_value(sol.values);
    sol.iterations = state.iterations;
    sol.duals = VectorXd::Zero(prog.num_rows());
    for (std::size_t k = 0; k < f.row_refs.size(); ++k) {
      const auto& ref = f.row_refs[k];
      const double mult = ref.ineq ? state.yi(ref.index) : state.ye(ref.index);
      sol.duals(red.kept_rows[k]) = ref.dual_factor * mult;
    }
  };

  if (st.outcome == IpmOutcome::converged ||
      st.outcome == IpmOutcome::acceptable) {
    report_optimal(st);
    if (st.outcome == IpmOutcome::acceptable)
      sol.diagnostic = "accepted at relaxed tolerance (residual " +
                       std::to_string(st.quality) + ")";
    return sol;
  }

  // certify: feasibility first, then boundedness
  IpmParams aux = prm;
  aux.tol = std::max(prm.tol, 1e-10);
  aux.accept = 1e-6;
  aux.max_iter = 300;

  const ConvexProgram p1 = make_phase1(red.prog);
  const IpmState st1 = run_ipm(p1, aux);
  const bool phase1_done = st1.outcome == IpmOutcome::converged ||
                           st1.outcome == IpmOutcome::acceptable;
  if (phase1_done) {
    const double slack_mass = st1.objective;
    if (slack_mass > 1e-7 * (1.0 + f.bnorm)) {
      sol.status = SolveStatus::infeasible;
      sol.values = expand(st1.w.head(red.prog.num_variables()), false);
      sol.diagnostic =
          "infeasible: minimum constraint relaxation mass " +
          std::to_string(slack_mass);
      return sol;
    }
    const ConvexProgram rec = make_recession(red.prog);
    const IpmState st2 = run_ipm(rec, aux);
    if ((st2.outcome == IpmOutcome::converged ||
         st2.outcome == IpmOutcome::acceptable) &&
        st2.objective < -1e-8 * f.cnorm) {
      sol.status = SolveStatus::unbounded;
      sol.values = expand(st2.w, true);
      sol.objective = -kInf;
      sol.diagnostic =
          "unbounded: recession direction improves the objective at rate " +
          std::to_string(-st2.objective) + " per unit step";
      return sol;
    }
  }

  // feasible and bounded (or uncertified): retry with heavier regularization
  IpmParams retry = prm;
  retry.delta0 = 1e-7;
  retry.max_iter = 400;
  Ipm second(f, retry);
  IpmState st3 = second.run();
  if (st3.outcome == IpmOutcome::converged ||
      st3.outcome == IpmOutcome::acceptable) {
    report_optimal(st3);
    if (st3.outcome == IpmOutcome::acceptable)
      sol.diagnostic = "accepted at relaxed tolerance (residual " +
                       std::to_string(st3.quality) + ")";
    return sol;
  }

  sol.status = SolveStatus::numerical_failure;
  sol.values = expand(st.w, false);
  sol.objective = prog.objective_value(sol.values);
  std::ostringstream os;
  os << "no certificate: best scaled residual " << st.quality << " after "
     << st.iterations << " iterations";
  sol.diagnostic = os.str();
  return sol;
}

}  // namespace dro::reformulate
