#include "dro/calibrate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "dro/partition.hpp"
#include "dro/reformulate.hpp"
#include "dro/rng.hpp"

namespace dro::calibrate {

namespace {

// Regularized lower incomplete gamma P(a, x): series for x < a + 1,
// continued fraction for the complement otherwise.
double gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int it = 0; it < 500; ++it) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 3e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // modified Lentz for the continued fraction of Q(a, x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 3e-16) break;
  }
  double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

}  // namespace

double chi2_quantile(int dof, double q) {
  if (dof < 1) throw std::invalid_argument("chi2_quantile: dof must be >= 1");
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("chi2_quantile: q must lie in (0, 1)");
  const double a = 0.5 * dof;
  auto cdf = [&](double x) { return gamma_p(a, 0.5 * x); };

  double lo = 0.0, hi = dof + 10.0;
  while (cdf(hi) < q && hi < 1e9) hi *= 2.0;
  for (int it = 0; it < 120; ++it) {
    double mid = 0.5 * (lo + hi);
    (cdf(mid) < q ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  // Newton polish against the density
  const double lg = std::lgamma(a);
  for (int it = 0; it < 3; ++it) {
    double pdf = std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::log(2.0) - lg);
    if (pdf <= 0.0) break;
    double step = (cdf(x) - q) / pdf;
    double next = x - step;
    if (next > lo && next < hi) x = next;
  }
  return x;
}

double radius_phi_divergence(int n, int regions, double beta_p,
                             double phi_dd1) {
  if (n < 1) throw std::invalid_argument("radius_phi_divergence: N >= 1");
  if (regions < 2)
    throw std::invalid_argument(
        "radius_phi_divergence: needs at least two regions (zero degrees of "
        "freedom otherwise)");
  if (!(beta_p > 0.0 && beta_p < 1.0))
    throw std::invalid_argument("radius_phi_divergence: beta in (0, 1)");
  if (!(phi_dd1 > 0.0))
    throw std::invalid_argument("radius_phi_divergence: phi''(1) > 0");
  return phi_dd1 / (2.0 * n) * chi2_quantile(regions - 1, 1.0 - beta_p);
}

double radius_total_variation(int n, int regions, double beta_p) {
  if (n < 1) throw std::invalid_argument("radius_total_variation: N >= 1");
  if (regions < 1)
    throw std::invalid_argument("radius_total_variation: I >= 1");
  if (!(beta_p > 0.0 && beta_p < 1.0))
    throw std::invalid_argument("radius_total_variation: beta in (0, 1)");
  return regions / std::sqrt((double)n) *
         (2.0 + std::sqrt(2.0 * std::log(regions / beta_p)));
}

double epsilon_concentration(int n_i, double beta_i, int dim, double a_i,
                             double B_i, double C_i) {
  if (n_i < 1) throw std::invalid_argument("epsilon_concentration: N_i >= 1");
  if (!(beta_i > 0.0 && beta_i <= 1.0))
    throw std::invalid_argument("epsilon_concentration: beta in (0, 1]");
  if (!(a_i > 1.0))
    throw std::invalid_argument("epsilon_concentration: a > 1");
  if (!(B_i > 0.0) || !(C_i > 0.0))
    throw std::invalid_argument("epsilon_concentration: B, C > 0");
  if (dim == 2)
    throw std::invalid_argument(
        "epsilon_concentration: the bound excludes dimension 2");
  double mass = std::log(B_i / beta_i);
  if (mass < 0.0)
    throw std::invalid_argument("epsilon_concentration: beta above B");
  double base = mass / (C_i * n_i);
  if (n_i >= mass / C_i) return std::pow(base, 1.0 / std::max(dim, 2));
  return std::pow(base, 1.0 / a_i);
}

double combined_epsilon(const core::Vector& p,
                        const std::vector<double>& eps_list) {
  if ((int)eps_list.size() != p.size())
    throw std::invalid_argument("combined_epsilon: length mismatch");
  if (p.size() == 0 || p.minCoeff() < -1e-12 ||
      std::abs(p.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("combined_epsilon: p must lie on the simplex");
  double total = 0.0;
  for (int i = 0; i < p.size(); ++i) total += p(i) * eps_list[i];
  return total;
}

Metrics metrics(double actual_cost, double certificate) {
  Metrics m;
  m.certificate_gap = actual_cost - certificate;
  m.reliable = m.certificate_gap <= 0.0;
  return m;
}

int screen_threshold(double beta, int kboot) {
  if (kboot < 1) throw std::invalid_argument("screen_threshold: kboot >= 1");
  if (!(beta >= 0.0 && beta < 1.0))
    throw std::invalid_argument("screen_threshold: beta in [0, 1)");
  return (int)std::ceil((1.0 - beta) * kboot - 1e-9);
}

namespace {

struct Cell {
  bool solved = false;
  double certificate = 0.0;
  double validation = std::numeric_limits<double>::infinity();
};

struct SolveOut {
  bool ok = false;
  core::Vector x;
  double objective = 0.0;
};

SolveOut solve_method(TuneMethod method, const TuneSetup& setup,
                      const core::SampleSet& points,
                      const TuneCandidate& cand) {
  SolveOut out;
  reformulate::BuiltProgram built;
  if (method == TuneMethod::drow) {
    built = reformulate::reduce_drow(points, setup.objective, setup.decision,
                                     cand.epsilon, setup.scheme.support);
  } else {
    core::Instance inst;
    inst.decision = setup.decision;
    inst.objective = setup.objective;
    inst.partition = setup.scheme;
    inst.nominal = partition::build_nominal(points, setup.scheme);
    inst.ambiguity.epsilon = cand.epsilon;
    inst.ambiguity.rho = cand.rho;
    inst.ambiguity.cone = setup.cone;
    built = setup.objective.separable()
                ? reformulate::build_program_separable(inst)
                : reformulate::build_program(inst);
  }
  auto sol = reformulate::solve(built.program);
  if (sol.status != reformulate::SolveStatus::optimal) return out;
  out.ok = true;
  out.x = built.decision_of(sol);
  out.objective = sol.objective;
  return out;
}

double average_cost(const core::PiecewiseObjective& f, const core::Vector& x,
                    const core::SampleSet& points) {
  double total = 0.0;
  for (const auto& xi : points) total += f.value(x, xi);
  return total / (double)points.size();
}

}  // namespace

TuneResult bootstrap_tune(const core::SampleSet& sample, TuneMethod method,
                          const TuneSetup& setup,
                          const std::vector<TuneCandidate>& candidates,
                          double beta, int kboot, std::uint64_t seed,
                          int jobs) {
  const int n = (int)sample.size();
  if (n == 0) throw std::invalid_argument("bootstrap_tune: empty sample");
  if (kboot < 2) throw std::invalid_argument("bootstrap_tune: kboot >= 2");
  if (candidates.empty())
    throw std::invalid_argument("bootstrap_tune: empty candidate grid");
  if (jobs < 1) jobs = 1;

  // Resample index sets and their out-of-bag complements; drawn serially so
  // the worker count cannot shift any stream.
  std::vector<core::SampleSet> train(kboot), validate(kboot);
  std::vector<double> rho_floor(kboot, 0.0);
  for (int r = 0; r < kboot; ++r) {
    rng::Stream stream(rng::substream(seed, {0xB007u, (std::uint64_t)r}));
    std::vector<char> drawn(n, 0);
    for (int j = 0; j < n; ++j) {
      int pick = (int)stream.uniform_int(0, n - 1);
      drawn[pick] = 1;
      train[r].push_back(sample[pick]);
    }
    for (int j = 0; j < n; ++j)
      if (!drawn[j]) validate[r].push_back(sample[j]);
    if (validate[r].empty()) validate[r] = sample;  // bag swallowed everything
    if (method == TuneMethod::droc) {
      auto nominal = partition::build_nominal(train[r], setup.scheme);
      rho_floor[r] =
          reformulate::min_radius_feasible(setup.cone, nominal.weights);
    }
  }

  const int ncand = (int)candidates.size();
  std::vector<char> filtered(ncand, 0);
  if (method == TuneMethod::droc) {
    double need = *std::max_element(rho_floor.begin(), rho_floor.end());
    // The floor is solved to interior-point accuracy; compare at that scale.
    for (int c = 0; c < ncand; ++c)
      if (candidates[c].rho < need - 1e-8) filtered[c] = 1;
  }

  // One cell per surviving (resample, candidate) pair, any execution order.
  std::vector<std::vector<Cell>> cells(kboot, std::vector<Cell>(ncand));
  std::vector<std::pair<int, int>> work;
  for (int r = 0; r < kboot; ++r)
    for (int c = 0; c < ncand; ++c)
      if (!filtered[c]) work.push_back({r, c});

  std::atomic<size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      size_t w = cursor.fetch_add(1);
      if (w >= work.size()) return;
      auto [r, c] = work[w];
      SolveOut out = solve_method(method, setup, train[r], candidates[c]);
      if (!out.ok) continue;
      Cell& cell = cells[r][c];
      cell.solved = true;
      cell.certificate = out.objective;
      cell.validation = average_cost(setup.objective, out.x, validate[r]);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  const int threshold = screen_threshold(beta, kboot);
  TuneResult result;
  result.threshold = threshold;
  result.kboot = kboot;
  result.table.resize(ncand);
  for (int c = 0; c < ncand; ++c) {
    TuneRow& row = result.table[c];
    row.candidate = c;
    row.epsilon = candidates[c].epsilon;
    row.rho = candidates[c].rho;
    row.filtered = filtered[c];
    if (filtered[c]) {
      row.mean_validation = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double total = 0.0;
    for (int r = 0; r < kboot; ++r) {
      const Cell& cell = cells[r][c];
      total += cell.validation;  // +inf for failed solves
      if (cell.solved && cell.certificate >= cell.validation)
        ++row.screen_count;
    }
    row.mean_validation = total / kboot;
  }

  int best = -1;
  for (int c = 0; c < ncand; ++c) {
    const TuneRow& row = result.table[c];
    if (row.filtered || row.screen_count < threshold) continue;
    if (best < 0 || row.mean_validation < result.table[best].mean_validation)
      best = c;
  }
  if (best < 0)
    throw NoReliableCandidate(
        "bootstrap_tune: no candidate covered its validation cost in " +
            std::to_string(threshold) + " of " + std::to_string(kboot) +
            " resamples",
        result.table);

  result.selected_candidate = best;
  result.selected = candidates[best];
  result.table[best].selected = true;

  SolveOut final = solve_method(method, setup, sample, candidates[best]);
  if (!final.ok)
    throw std::runtime_error(
        "bootstrap_tune: full-sample solve failed for the selected "
        "candidate");
  result.decision = final.x;
  result.certificate = final.objective;
  return result;
}

std::string tune_table_csv(const std::vector<TuneRow>& table) {
  std::string out =
      "candidate_id,epsilon,rho,screen_count,mean_validation_cost,selected\n";
  char buf[160];
  for (const auto& row : table) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%d,%.17g,%d\n",
                  row.candidate, row.epsilon, row.rho, row.screen_count,
                  row.mean_validation, row.selected ? 1 : 0);
    out += buf;
  }
  return out;
}

}  // namespace dro::calibrate
