#include "dro/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dro/partition.hpp"
#include "dro/reformulate.hpp"
#include "dro/rng.hpp"

namespace dro::bench {

namespace {

constexpr std::uint64_t kPoolTag = 0x706f6f6cULL;
constexpr std::uint64_t kTrialTag = 0x74726961ULL;
constexpr std::uint64_t kClusterTag = 0x636c7573ULL;
constexpr std::uint64_t kTuneTag = 0x74756e65ULL;

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

core::Vector constant_vector(int n, double v) {
  return core::Vector::Constant(n, v);
}

core::Box make_box(double lo, double hi, int dim) {
  core::Box b;
  b.lower = constant_vector(dim, lo);
  b.upper = constant_vector(dim, hi);
  return b;
}

}  // namespace

MixtureSpec single_item_demand() {
  MixtureSpec spec;
  spec.means = {constant_vector(1, 0.2), constant_vector(1, 0.5),
                constant_vector(1, 0.8)};
  spec.variances = {constant_vector(1, 0.05 * 0.05),
                    constant_vector(1, 0.1 * 0.1),
                    constant_vector(1, 0.05 * 0.05)};
  spec.weights = {0.1, 0.35, 0.55};
  spec.support = make_box(0.0, 1.0, 1);
  return spec;
}

MixtureSpec multi_item_demand() {
  MixtureSpec spec;
  spec.means = {constant_vector(20, 3.0), constant_vector(20, 5.0),
                constant_vector(20, 7.0)};
  spec.variances = {constant_vector(20, 1.0), constant_vector(20, 0.5),
                    constant_vector(20, 0.1)};
  spec.weights = {0.1, 0.65, 0.25};
  spec.support = make_box(0.0, 10.0, 20);
  return spec;
}

MixtureSpec cournot_signal() {
  MixtureSpec spec;
  spec.means = {constant_vector(1, 0.0), constant_vector(1, 1.2),
                constant_vector(1, 2.5)};
  spec.variances = {constant_vector(1, 0.3), constant_vector(1, 0.3),
                    constant_vector(1, 0.3)};
  spec.weights = {0.5, 0.2, 0.3};
  spec.support = make_box(-1.8, 3.0, 1);
  return spec;
}

core::SampleSet sample_truncated_mixture(const MixtureSpec& spec, int n,
                                         std::uint64_t seed) {
  const int m = spec.components();
  if (m < 1) throw std::invalid_argument("mixture: no components");
  if (static_cast<int>(spec.means.size()) != m ||
      static_cast<int>(spec.variances.size()) != m)
    throw std::invalid_argument("mixture: component count mismatch");
  if (!spec.support.finite() || spec.support.dim() < 1)
    throw std::invalid_argument("mixture: support must be a finite box");
  const int d = spec.dim();
  double total = 0.0;
  for (int c = 0; c < m; ++c) {
    if (spec.means[c].size() != d || spec.variances[c].size() != d)
      throw std::invalid_argument("mixture: component dimension mismatch");
    if ((spec.variances[c].array() <= 0.0).any())
      throw std::invalid_argument("mixture: variances must be positive");
    if (spec.weights[c] < 0.0)
      throw std::invalid_argument("mixture: negative weight");
    total += spec.weights[c];
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("mixture: weights must sum to 1");
  if (n < 0) throw std::invalid_argument("mixture: negative sample count");

  core::SampleSet out;
  out.reserve(static_cast<std::size_t>(n));
  if (n == 0) return out;

  std::vector<core::Vector> stddev(spec.variances.size());
  for (int c = 0; c < m; ++c)
    stddev[c] = spec.variances[c].array().sqrt().matrix();

  rng::Stream stream(seed);
  constexpr long kDrawCap = 10000000;
  long draws = 0;
  core::Vector point(d);
  while (static_cast<int>(out.size()) < n) {
    if (++draws > kDrawCap)
      throw std::runtime_error(
          "mixture sampler: draw cap exceeded; the truncation box captures "
          "almost no mass");
    const std::size_t c = stream.categorical(spec.weights);
    for (int l = 0; l < d; ++l)
      point(l) = stream.normal(spec.means[c](l), stddev[c](l));
    if (spec.support.contains(point)) out.push_back(point);
  }
  return out;
}

core::PiecewiseObjective newsvendor_objective(double h, double b) {
  if (h <= 0.0 || b <= 0.0)
    throw std::invalid_argument("newsvendor: cost coefficients must be > 0");
  core::PiecewiseObjective obj;
  core::AffinePiece over;  // h (x - xi)
  over.slope = core::AffineMap::constant(constant_vector(1, -h), 1);
  over.intercept = core::Quadratic::affine(constant_vector(1, h), 0.0);
  core::AffinePiece under;  // b (xi - x)
  under.slope = core::AffineMap::constant(constant_vector(1, b), 1);
  under.intercept = core::Quadratic::affine(constant_vector(1, -b), 0.0);
  obj.pieces = {over, under};
  return obj;
}

core::PiecewiseObjective newsvendor_objective(const core::Vector& h,
                                              const core::Vector& b) {
  const int d = static_cast<int>(h.size());
  if (d < 1 || b.size() != d)
    throw std::invalid_argument("newsvendor: h and b must match, dim >= 1");
  core::PiecewiseObjective obj;
  obj.blocks.resize(static_cast<std::size_t>(d));
  for (int l = 0; l < d; ++l) {
    if (h(l) <= 0.0 || b(l) <= 0.0)
      throw std::invalid_argument(
          "newsvendor: cost coefficients must be > 0");
    core::Vector hl = core::Vector::Zero(d);
    core::Vector bl = core::Vector::Zero(d);
    hl(l) = h(l);
    bl(l) = -b(l);
    core::AffinePiece over;  // h_l (x_l - xi_l)
    over.slope = core::AffineMap::constant(constant_vector(1, -h(l)), d);
    over.intercept = core::Quadratic::affine(hl, 0.0);
    core::AffinePiece under;  // b_l (xi_l - x_l)
    under.slope = core::AffineMap::constant(constant_vector(1, b(l)), d);
    under.intercept = core::Quadratic::affine(bl, 0.0);
    obj.blocks[static_cast<std::size_t>(l)] = {over, under};
  }
  return obj;
}

core::PiecewiseObjective cournot_objective() {
  core::PiecewiseObjective obj;
  core::AffinePiece piece;  // (-x) xi + x^2
  piece.slope.coef = -core::Matrix::Identity(1, 1);
  piece.slope.offset = core::Vector::Zero(1);
  piece.intercept.quad = core::Matrix::Identity(1, 1);
  piece.intercept.linear = core::Vector::Zero(1);
  piece.intercept.constant = 0.0;
  obj.pieces = {piece};
  return obj;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::droc:
      return "droc";
    case Method::drow:
      return "drow";
    case Method::saa:
      return "saa";
  }
  throw std::logic_error("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "droc") return Method::droc;
  if (name == "drow") return Method::drow;
  if (name == "saa") return Method::saa;
  throw std::invalid_argument("unknown method name: " + name);
}

ParameterTable single_item_schedule() {
  return {{2, {0.9, 0.9, 1.0}},    {5, {0.8, 0.8, 0.9}},
          {10, {0.7, 0.7, 0.8}},   {20, {0.4, 0.6, 0.6}},
          {50, {0.15, 0.25, 0.4}}, {100, {0.1, 0.2, 0.25}},
          {200, {0.01, 0.15, 0.05}}};
}

ParameterTable multi_item_schedule() {
  return {{2, {5.0, 2.0, 60.0}},   {5, {5.0, 2.0, 50.0}},
          {10, {4.5, 1.5, 40.0}},  {20, {4.0, 1.0, 20.0}},
          {50, {2.5, 0.6, 10.0}},  {100, {1.75, 0.5, 8.0}},
          {200, {1.25, 0.35, 4.0}}};
}

BenchmarkConfig single_item_benchmark() {
  BenchmarkConfig cfg;
  cfg.problem = "single_item_newsvendor";
  cfg.mixture = single_item_demand();
  cfg.objective = newsvendor_objective(4.0, 2.0);
  cfg.decision.bounds = make_box(0.0, 1.0, 1);
  cfg.methods = {Method::droc, Method::drow, Method::saa};
  cfg.sample_sizes = {2, 5, 10, 20, 50, 100, 200};
  cfg.trials = 200;
  cfg.seed = 1;
  cfg.pool_size = 15000;
  cfg.regions = 4;
  cfg.source = ParameterSource::table;
  cfg.table = single_item_schedule();
  return cfg;
}

BenchmarkConfig multi_item_benchmark() {
  BenchmarkConfig cfg;
  cfg.problem = "multi_item_newsvendor";
  cfg.mixture = multi_item_demand();
  cfg.objective = newsvendor_objective(
      (core::Vector(20) << constant_vector(10, 2.0), constant_vector(10, 4.0))
          .finished(),
      (core::Vector(20) << constant_vector(10, 4.0), constant_vector(10, 2.0))
          .finished());
  cfg.decision.bounds = make_box(0.0, 10.0, 20);
  cfg.methods = {Method::droc, Method::drow, Method::saa};
  cfg.sample_sizes = {2, 5, 10, 20, 50, 100, 200};
  cfg.trials = 200;
  cfg.seed = 1;
  cfg.pool_size = 15000;
  cfg.regions = 4;
  cfg.source = ParameterSource::table;
  cfg.table = multi_item_schedule();
  return cfg;
}

BenchmarkConfig cournot_benchmark() {
  BenchmarkConfig cfg;
  cfg.problem = "cournot";
  cfg.mixture = cournot_signal();
  cfg.objective = cournot_objective();
  cfg.decision.bounds = make_box(0.0, 1.0, 1);
  cfg.methods = {Method::droc, Method::drow, Method::saa};
  cfg.sample_sizes = {2, 5, 10, 20, 50, 100, 200};
  cfg.trials = 300;
  cfg.seed = 1;
  cfg.pool_size = 10000;
  cfg.regions = 4;
  cfg.source = ParameterSource::bootstrap;
  cfg.beta = 0.15;
  cfg.kboot = 50;
  for (double eps : {0.05, 0.1, 0.2, 0.4, 0.8})
    for (double rho : {0.05, 0.1, 0.25, 0.5, 1.0, 2.0})
      cfg.candidates.push_back({eps, rho});
  return cfg;
}

double average_cost(const core::PiecewiseObjective& objective,
                    const core::Vector& x, const core::SampleSet& points) {
  if (points.empty())
    throw std::invalid_argument("average_cost: no evaluation points");
  double acc = 0.0;
  if (objective.separable()) {
    // Precompute per-piece scalar slope / intercept at x.
    std::vector<std::vector<std::pair<double, double>>> at_x(
        objective.blocks.size());
    for (std::size_t l = 0; l < objective.blocks.size(); ++l)
      for (const auto& piece : objective.blocks[l])
        at_x[l].push_back(
            {piece.slope.value(x)(0), piece.intercept.value(x)});
    for (const auto& xi : points) {
      double total = 0.0;
      for (std::size_t l = 0; l < at_x.size(); ++l) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& [s, c] : at_x[l])
          best = std::max(best, s * xi(static_cast<int>(l)) + c);
        total += best;
      }
      acc += total;
    }
  } else {
    std::vector<std::pair<core::Vector, double>> at_x;
    for (const auto& piece : objective.pieces)
      at_x.push_back({piece.slope.value(x), piece.intercept.value(x)});
    for (const auto& xi : points) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& [s, c] : at_x) best = std::max(best, s.dot(xi) + c);
      acc += best;
    }
  }
  return acc / static_cast<double>(points.size());
}

namespace {

void validate_config(const BenchmarkConfig& cfg) {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("benchmark config: " + msg);
  };
  if (cfg.mixture.components() < 1) fail("mixture has no components");
  if (cfg.objective.support_dim() != cfg.mixture.dim())
    fail("objective support dimension does not match the mixture");
  if (cfg.objective.decision_dim() != cfg.decision.dim())
    fail("objective decision dimension does not match the decision spec");
  if (cfg.methods.empty()) fail("no methods requested");
  for (std::size_t a = 0; a < cfg.methods.size(); ++a)
    for (std::size_t b = a + 1; b < cfg.methods.size(); ++b)
      if (cfg.methods[a] == cfg.methods[b]) fail("duplicate method");
  if (cfg.sample_sizes.empty()) fail("empty sample size grid");
  for (std::size_t a = 0; a < cfg.sample_sizes.size(); ++a) {
    if (cfg.sample_sizes[a] < 1) fail("sample sizes must be >= 1");
    for (std::size_t b = a + 1; b < cfg.sample_sizes.size(); ++b)
      if (cfg.sample_sizes[a] == cfg.sample_sizes[b])
        fail("duplicate sample size");
  }
  if (cfg.trials < 1) fail("trials must be >= 1");
  if (cfg.pool_size < 1) fail("pool size must be >= 1");
  if (cfg.regions < 1) fail("regions must be >= 1");
  if (cfg.cone_tolerance < 0.0) fail("cone tolerance must be >= 0");
  if (cfg.jobs < 1) fail("jobs must be >= 1");

  const bool has_droc = std::count(cfg.methods.begin(), cfg.methods.end(),
                                   Method::droc) > 0;
  const bool has_drow = std::count(cfg.methods.begin(), cfg.methods.end(),
                                   Method::drow) > 0;
  switch (cfg.source) {
    case ParameterSource::table:
      if (has_droc || has_drow)
        for (int n : cfg.sample_sizes) {
          auto it = cfg.table.find(n);
          if (it == cfg.table.end())
            fail("no schedule entry for sample size " + std::to_string(n));
          if (it->second.droc_epsilon < 0.0 || it->second.droc_rho < 0.0 ||
              it->second.drow_rho < 0.0)
            fail("schedule budgets must be >= 0");
        }
      break;
    case ParameterSource::formulas:
      if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) fail("beta must be in (0,1)");
      if (cfg.tail_exponent <= 1.0) fail("tail exponent must be > 1");
      if ((has_droc || has_drow) && cfg.mixture.dim() == 2)
        fail("the transport radius bound is undefined in dimension 2");
      break;
    case ParameterSource::bootstrap:
      if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) fail("beta must be in (0,1)");
      if (cfg.candidates.empty()) fail("no tuning candidates");
      if (cfg.kboot < 1) fail("kboot must be >= 1");
      break;
  }
}

struct TrialContext {
  const BenchmarkConfig& cfg;
  const core::SampleSet& pool;
};

/// Partition one trial sample: kmeans labels, an axis tree over them, and
/// the region boxes clipped to the support.
core::PartitionScheme trial_partition(const TrialContext& ctx, int n,
                                      const core::SampleSet& sample,
                                      std::uint64_t cluster_seed) {
  const BenchmarkConfig& cfg = ctx.cfg;
  int k = std::min(cfg.regions, n);
  if (cfg.elbow) {
    const int k_max = std::min(cfg.regions + 1, n);
    if (k_max >= 3) k = partition::elbow_select(sample, k_max, cluster_seed);
  }
  auto model = partition::kmeans(sample, k, cluster_seed);
  auto tree = partition::fit_axis_tree(sample, model.labels, k);
  return partition::regions(tree, cfg.mixture.support);
}

/// Order cone from the pool: region frequencies (floored at one pool point),
/// ranked descending, consecutive-ratio bounds slackened by the configured
/// tolerance, mapped back onto region indices.
cones::OrderCone pool_cone(const TrialContext& ctx,
                           const core::PartitionScheme& scheme) {
  const int regions = scheme.size();
  if (regions == 1) return cones::trivial_cone(1);
  std::vector<double> freq(static_cast<std::size_t>(regions), 0.0);
  for (const auto& xi : ctx.pool)
    freq[static_cast<std::size_t>(scheme.classify(xi))] += 1.0;
  const double floor_mass = 1.0;
  for (double& f : freq) f = std::max(f, floor_mass);
  std::vector<int> order(static_cast<std::size_t>(regions));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (freq[static_cast<std::size_t>(a)] !=
        freq[static_cast<std::size_t>(b)])
      return freq[static_cast<std::size_t>(a)] >
             freq[static_cast<std::size_t>(b)];
    return a < b;
  });
  std::vector<double> ratios;
  for (int r = 0; r + 1 < regions; ++r)
    ratios.push_back(freq[static_cast<std::size_t>(order[r])] /
                     freq[static_cast<std::size_t>(order[r + 1])]);
  return cones::permute(cones::ratio_cone(ratios, ctx.cfg.cone_tolerance),
                        order);
}

void score_row(BenchmarkRow& row, const TrialContext& ctx,
               const core::Vector& x, double certificate) {
  row.status = "ok";
  row.decision = x;
  row.certificate = certificate;
  row.actual_cost = average_cost(ctx.cfg.objective, x, ctx.pool);
  row.certificate_gap =
      calibrate::metrics(row.actual_cost, certificate).certificate_gap;
}

void run_droc(BenchmarkRow& row, const TrialContext& ctx, int n, int trial,
              const core::SampleSet& sample) {
  const BenchmarkConfig& cfg = ctx.cfg;
  const std::uint64_t cluster_seed = rng::substream(
      cfg.seed, {kClusterTag, static_cast<std::uint64_t>(n),
                 static_cast<std::uint64_t>(trial)});
  auto scheme = trial_partition(ctx, n, sample, cluster_seed);
  auto cone = pool_cone(ctx, scheme);

  if (cfg.source == ParameterSource::bootstrap) {
    calibrate::TuneSetup setup{cfg.objective, cfg.decision, scheme, cone};
    auto tuned = calibrate::bootstrap_tune(
        sample, calibrate::TuneMethod::droc, setup, cfg.candidates, cfg.beta,
        cfg.kboot,
        rng::substream(cfg.seed, {kTuneTag, static_cast<std::uint64_t>(n),
                                  static_cast<std::uint64_t>(trial)}),
        1);
    score_row(row, ctx, tuned.decision, tuned.certificate);
    return;
  }

  auto nominal = partition::build_nominal(sample, scheme);
  double eps = 0.0, rho = 0.0;
  if (cfg.source == ParameterSource::table) {
    const auto& entry = cfg.table.at(n);
    eps = entry.droc_epsilon;
    rho = entry.droc_rho;
  } else {
    const int regions = scheme.size();
    rho = calibrate::radius_total_variation(n, regions, cfg.beta / 2.0);
    std::vector<double> eps_list;
    for (int i = 0; i < regions; ++i)
      eps_list.push_back(calibrate::epsilon_concentration(
          nominal.effective_count(i),
          cfg.beta / (2.0 * static_cast<double>(regions)), cfg.mixture.dim(),
          cfg.tail_exponent));
    eps = calibrate::combined_epsilon(nominal.weights, eps_list);
  }

  try {
    // The floor comes out of the interior-point method, so compare at its
    // accuracy, not at machine precision.
    if (rho < reformulate::min_radius_feasible(cone, nominal.weights) -
                  1e-8) {
      row.status = "infeasible_config";
      return;
    }
  } catch (const reformulate::InfeasiblePrior&) {
    row.status = "infeasible_config";
    return;
  }

  core::Instance inst;
  inst.decision = cfg.decision;
  inst.objective = cfg.objective;
  inst.partition = scheme;
  inst.nominal = nominal;
  inst.ambiguity = {eps, rho, cone};
  auto built = cfg.objective.separable()
                   ? reformulate::build_program_separable(inst)
                   : reformulate::build_program(inst);
  auto sol = reformulate::solve(built.program);
  if (sol.status != reformulate::SolveStatus::optimal)
    throw std::runtime_error("partitioned solve: " +
                             reformulate::status_name(sol.status));
  score_row(row, ctx, built.decision_of(sol), sol.objective);
}

void run_drow(BenchmarkRow& row, const TrialContext& ctx, int n, int trial,
              const core::SampleSet& sample) {
  const BenchmarkConfig& cfg = ctx.cfg;
  if (cfg.source == ParameterSource::bootstrap) {
    calibrate::TuneSetup setup{cfg.objective, cfg.decision,
                               partition::single_region(cfg.mixture.support),
                               cones::trivial_cone(1)};
    auto tuned = calibrate::bootstrap_tune(
        sample, calibrate::TuneMethod::drow, setup, cfg.candidates, cfg.beta,
        cfg.kboot,
        rng::substream(cfg.seed, {kTuneTag, static_cast<std::uint64_t>(n),
                                  static_cast<std::uint64_t>(trial)}),
        1);
    score_row(row, ctx, tuned.decision, tuned.certificate);
    return;
  }
  const double radius =
      cfg.source == ParameterSource::table
          ? cfg.table.at(n).drow_rho
          : calibrate::epsilon_concentration(n, cfg.beta, cfg.mixture.dim(),
                                             cfg.tail_exponent);
  auto built = reformulate::reduce_drow(sample, cfg.objective, cfg.decision,
                                        radius, cfg.mixture.support);
  auto sol = reformulate::solve(built.program);
  if (sol.status != reformulate::SolveStatus::optimal)
    throw std::runtime_error("ball solve: " +
                             reformulate::status_name(sol.status));
  score_row(row, ctx, built.decision_of(sol), sol.objective);
}

void run_saa(BenchmarkRow& row, const TrialContext& ctx,
             const core::SampleSet& sample) {
  auto built = reformulate::reduce_saa(sample, ctx.cfg.objective,
                                       ctx.cfg.decision);
  auto sol = reformulate::solve(built.program);
  if (sol.status != reformulate::SolveStatus::optimal)
    throw std::runtime_error("empirical solve: " +
                             reformulate::status_name(sol.status));
  score_row(row, ctx, built.decision_of(sol), sol.objective);
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
  validate_config(cfg);

  BenchmarkResult result;
  const core::SampleSet pool = sample_truncated_mixture(
      cfg.mixture, cfg.pool_size, rng::substream(cfg.seed, {kPoolTag}));

  auto ref = reformulate::reduce_saa(pool, cfg.objective, cfg.decision);
  auto ref_sol = reformulate::solve(ref.program);
  if (ref_sol.status != reformulate::SolveStatus::optimal)
    throw std::runtime_error("benchmark: pool reference solve failed (" +
                             reformulate::status_name(ref_sol.status) + ")");
  result.reference_decision = ref.decision_of(ref_sol);
  result.reference_cost =
      average_cost(cfg.objective, result.reference_decision, pool);

  const std::size_t n_methods = cfg.methods.size();
  const std::size_t n_sizes = cfg.sample_sizes.size();
  const std::size_t trials = static_cast<std::size_t>(cfg.trials);
  result.rows.resize(n_methods * n_sizes * trials);
  for (std::size_t mi = 0; mi < n_methods; ++mi)
    for (std::size_t ni = 0; ni < n_sizes; ++ni)
      for (std::size_t t = 0; t < trials; ++t) {
        BenchmarkRow& row = result.rows[(mi * n_sizes + ni) * trials + t];
        row.method = cfg.methods[mi];
        row.sample_size = cfg.sample_sizes[ni];
        row.trial = static_cast<int>(t);
        row.status = "failed";
        row.certificate = kNaN;
        row.actual_cost = kNaN;
        row.certificate_gap = kNaN;
      }

  TrialContext ctx{cfg, pool};
  const std::size_t items = n_sizes * trials;
  std::atomic<std::size_t> cursor{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t item = cursor.fetch_add(1);
      if (item >= items) return;
      const std::size_t ni = item / trials;
      const std::size_t t = item % trials;
      const int n = cfg.sample_sizes[ni];

      core::SampleSet sample;
      bool have_sample = true;
      try {
        sample = sample_truncated_mixture(
            cfg.mixture, n,
            rng::substream(cfg.seed,
                           {kTrialTag, static_cast<std::uint64_t>(n),
                            static_cast<std::uint64_t>(t)}));
      } catch (const std::exception&) {
        have_sample = false;
      }

      for (std::size_t mi = 0; mi < n_methods; ++mi) {
        BenchmarkRow& row = result.rows[(mi * n_sizes + ni) * trials + t];
        const auto start = std::chrono::steady_clock::now();
        if (have_sample) {
          try {
            switch (cfg.methods[mi]) {
              case Method::droc:
                run_droc(row, ctx, n, static_cast<int>(t), sample);
                break;
              case Method::drow:
                run_drow(row, ctx, n, static_cast<int>(t), sample);
                break;
              case Method::saa:
                run_saa(row, ctx, sample);
                break;
            }
          } catch (const std::exception&) {
            // Leave the row in its failed state; identity fields stand.
          }
        }
        row.solve_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
      }
    }
  };

  const std::size_t workers = std::min<std::size_t>(
      static_cast<std::size_t>(cfg.jobs), std::max<std::size_t>(items, 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }
  return result;
}

namespace {

std::string join_decision(const core::Vector& x) {
  std::string out;
  for (int i = 0; i < x.size(); ++i) {
    if (i) out += ';';
    out += fmt(x(i));
  }
  return out;
}

core::Vector split_decision(const std::string& field) {
  if (field.empty()) return core::Vector();
  std::vector<double> vals;
  std::size_t pos = 0;
  while (pos <= field.size()) {
    const std::size_t next = field.find(';', pos);
    const std::string tok = field.substr(
        pos, next == std::string::npos ? std::string::npos : next - pos);
    vals.push_back(std::strtod(tok.c_str(), nullptr));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  core::Vector x(static_cast<int>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i)
    x(static_cast<int>(i)) = vals[i];
  return x;
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = line.find(sep, pos);
    if (next == std::string::npos) {
      fields.push_back(line.substr(pos));
      return fields;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
}

const char* kCsvHeader =
    "method,sample_size,trial,status,certificate,actual_cost,"
    "certificate_gap,solve_time,decision";

}  // namespace

std::string to_csv(const BenchmarkResult& result) {
  if (result.rows.empty()) throw std::invalid_argument("to_csv: empty result");
  std::string out;
  out += "# reference_cost " + fmt(result.reference_cost) + "\n";
  out += "# reference_decision";
  if (result.reference_decision.size() > 0)
    out += " " + join_decision(result.reference_decision);
  out += "\n";
  out += kCsvHeader;
  out += "\n";
  for (const auto& row : result.rows) {
    out += method_name(row.method);
    out += ',' + std::to_string(row.sample_size);
    out += ',' + std::to_string(row.trial);
    out += ',' + row.status;
    out += ',' + fmt(row.certificate);
    out += ',' + fmt(row.actual_cost);
    out += ',' + fmt(row.certificate_gap);
    out += ',' + fmt(row.solve_time);
    out += ',' + join_decision(row.decision);
    out += '\n';
  }
  return out;
}

BenchmarkResult parse_csv_text(const std::string& text) {
  BenchmarkResult result;
  result.reference_cost = kNaN;
  bool saw_header = false;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto fields = split_fields(line, ' ');
      if (fields.size() >= 2 && fields[1] == "reference_cost" &&
          fields.size() >= 3)
        result.reference_cost = std::strtod(fields[2].c_str(), nullptr);
      else if (fields.size() >= 2 && fields[1] == "reference_decision")
        result.reference_decision =
            split_decision(fields.size() >= 3 ? fields[2] : "");
      continue;
    }
    if (!saw_header) {
      if (line != kCsvHeader)
        throw std::runtime_error("benchmark csv: unexpected header");
      saw_header = true;
      continue;
    }
    auto fields = split_fields(line, ',');
    if (fields.size() != 9)
      throw std::runtime_error("benchmark csv: malformed row: " + line);
    BenchmarkRow row;
    row.method = method_from_name(fields[0]);
    row.sample_size = std::atoi(fields[1].c_str());
    row.trial = std::atoi(fields[2].c_str());
    row.status = fields[3];
    row.certificate = std::strtod(fields[4].c_str(), nullptr);
    row.actual_cost = std::strtod(fields[5].c_str(), nullptr);
    row.certificate_gap = std::strtod(fields[6].c_str(), nullptr);
    row.solve_time = std::strtod(fields[7].c_str(), nullptr);
    row.decision = split_decision(fields[8]);
    result.rows.push_back(std::move(row));
  }
  if (!saw_header) throw std::runtime_error("benchmark csv: missing header");
  return result;
}

void emit_csv(const BenchmarkResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << to_csv(result);
  if (!out) throw std::runtime_error("write failed: " + path);
}

BenchmarkResult parse_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv_text(buf.str());
}

std::string strip_solve_time(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') {
      auto fields = split_fields(line, ',');
      if (fields.size() == 9) {
        fields.erase(fields.begin() + 7);
        line.clear();
        for (std::size_t i = 0; i < fields.size(); ++i) {
          if (i) line += ',';
          line += fields[i];
        }
      }
    }
    out += line;
    out += '\n';
  }
  return out;
}

namespace {

struct BoxStats {
  double lo = 0.0, q1 = 0.0, med = 0.0, q3 = 0.0, hi = 0.0;
  int count = 0;
};

double median_of(const std::vector<double>& sorted, std::size_t from,
                 std::size_t to) {
  const std::size_t n = to - from;
  const std::size_t mid = from + n / 2;
  if (n % 2 == 1) return sorted[mid];
  return 0.5 * (sorted[mid - 1] + sorted[mid]);
}

BoxStats box_stats(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  BoxStats s;
  s.count = static_cast<int>(values.size());
  const std::size_t n = values.size();
  s.med = median_of(values, 0, n);
  // Tukey hinges: medians of the lower / upper halves (middle value shared
  // when n is odd).
  const std::size_t half = n / 2;
  s.q1 = median_of(values, 0, n == 1 ? 1 : half + (n % 2));
  s.q3 = median_of(values, n == 1 ? 0 : half, n);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.lo = values.front();
  s.hi = values.back();
  for (double v : values)
    if (v >= lo_fence) {
      s.lo = v;
      break;
    }
  for (auto it = values.rbegin(); it != values.rend(); ++it)
    if (*it <= hi_fence) {
      s.hi = *it;
      break;
    }
  return s;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

const char* method_color(Method m) {
  switch (m) {
    case Method::droc:
      return "#1f77b4";
    case Method::drow:
      return "#d62728";
    case Method::saa:
      return "#2ca02c";
  }
  return "#000000";
}

double metric_value(const BenchmarkRow& row, const std::string& metric) {
  if (metric == "decision")
    return row.decision.size() > 0 ? row.decision(0) : kNaN;
  if (metric == "certificate") return row.certificate;
  if (metric == "actual_cost") return row.actual_cost;
  if (metric == "certificate_gap") return row.certificate_gap;
  throw std::invalid_argument("unknown metric: " + metric);
}

}  // namespace

std::string to_svg_boxplot(const BenchmarkResult& result,
                           const std::string& metric) {
  if (result.rows.empty())
    throw std::invalid_argument("boxplot: empty result");

  double reference = kNaN;
  if (metric == "decision")
    reference = result.reference_decision.size() > 0
                    ? result.reference_decision(0)
                    : kNaN;
  else if (metric == "certificate" || metric == "actual_cost")
    reference = result.reference_cost;
  else if (metric == "certificate_gap")
    reference = 0.0;
  else
    throw std::invalid_argument("unknown metric: " + metric);

  std::vector<Method> methods;
  std::vector<int> sizes;
  for (const auto& row : result.rows) {
    if (std::find(methods.begin(), methods.end(), row.method) ==
        methods.end())
      methods.push_back(row.method);
    if (std::find(sizes.begin(), sizes.end(), row.sample_size) == sizes.end())
      sizes.push_back(row.sample_size);
  }
  std::sort(sizes.begin(), sizes.end());

  std::vector<std::vector<BoxStats>> stats(
      sizes.size(), std::vector<BoxStats>(methods.size()));
  double lo = std::isnan(reference) ? kNaN : reference;
  double hi = lo;
  auto widen = [&](double v) {
    if (std::isnan(v)) return;
    if (std::isnan(lo) || v < lo) lo = v;
    if (std::isnan(hi) || v > hi) hi = v;
  };
  bool any_box = false;
  for (std::size_t si = 0; si < sizes.size(); ++si)
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      std::vector<double> values;
      for (const auto& row : result.rows)
        if (row.method == methods[mi] && row.sample_size == sizes[si] &&
            row.status == "ok") {
          const double v = metric_value(row, metric);
          if (!std::isnan(v)) values.push_back(v);
        }
      if (values.empty()) continue;
      stats[si][mi] = box_stats(std::move(values));
      widen(stats[si][mi].lo);
      widen(stats[si][mi].hi);
      any_box = true;
    }
  if (!any_box) throw std::runtime_error("boxplot: no usable rows");
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.06 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double width = 960, height = 540;
  const double ml = 70, mr = 24, mt = 36, mb = 56;
  const double plot_w = width - ml - mr, plot_h = height - mt - mb;
  auto ypix = [&](double v) {
    return mt + plot_h * (hi - v) / (hi - lo);
  };
  const double cluster_w = plot_w / static_cast<double>(sizes.size());
  const double slot_w = cluster_w / static_cast<double>(methods.size() + 1);
  const double box_w = std::min(24.0, slot_w * 0.8);

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt2(width) +
         "\" height=\"" + fmt2(height) + "\" viewBox=\"0 0 " + fmt2(width) +
         " " + fmt2(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt2(ml) + "\" y=\"" + fmt2(mt - 12) +
         "\" font-family=\"sans-serif\" font-size=\"15\">" + metric +
         "</text>\n";

  // Axes and y ticks.
  svg += "<line x1=\"" + fmt2(ml) + "\" y1=\"" + fmt2(mt) + "\" x2=\"" +
         fmt2(ml) + "\" y2=\"" + fmt2(mt + plot_h) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt2(ml) + "\" y1=\"" + fmt2(mt + plot_h) +
         "\" x2=\"" + fmt2(ml + plot_w) + "\" y2=\"" + fmt2(mt + plot_h) +
         "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 5; ++tick) {
    const double v = lo + (hi - lo) * tick / 5.0;
    const double y = ypix(v);
    svg += "<line x1=\"" + fmt2(ml - 4) + "\" y1=\"" + fmt2(y) + "\" x2=\"" +
           fmt2(ml) + "\" y2=\"" + fmt2(y) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt2(ml - 8) + "\" y=\"" + fmt2(y + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"12\">" +
           fmt_label(v) + "</text>\n";
  }

  // Dashed full-information reference.
  if (!std::isnan(reference)) {
    const double y = ypix(reference);
    svg += "<line x1=\"" + fmt2(ml) + "\" y1=\"" + fmt2(y) + "\" x2=\"" +
           fmt2(ml + plot_w) + "\" y2=\"" + fmt2(y) +
           "\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n";
  }

  for (std::size_t si = 0; si < sizes.size(); ++si) {
    const double cx = ml + cluster_w * (static_cast<double>(si) + 0.5);
    svg += "<text x=\"" + fmt2(cx) + "\" y=\"" + fmt2(mt + plot_h + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">N=" +
           std::to_string(sizes[si]) + "</text>\n";
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const BoxStats& s = stats[si][mi];
      if (s.count == 0) continue;
      const double x = ml + cluster_w * static_cast<double>(si) +
                       slot_w * (static_cast<double>(mi) + 1.0);
      const char* color = method_color(methods[mi]);
      // Whiskers with caps.
      svg += "<line x1=\"" + fmt2(x) + "\" y1=\"" + fmt2(ypix(s.lo)) +
             "\" x2=\"" + fmt2(x) + "\" y2=\"" + fmt2(ypix(s.q1)) +
             "\" stroke=\"" + color + "\"/>\n";
      svg += "<line x1=\"" + fmt2(x) + "\" y1=\"" + fmt2(ypix(s.q3)) +
             "\" x2=\"" + fmt2(x) + "\" y2=\"" + fmt2(ypix(s.hi)) +
             "\" stroke=\"" + color + "\"/>\n";
      for (double v : {s.lo, s.hi})
        svg += "<line x1=\"" + fmt2(x - box_w / 4) + "\" y1=\"" +
               fmt2(ypix(v)) + "\" x2=\"" + fmt2(x + box_w / 4) +
               "\" y2=\"" + fmt2(ypix(v)) + "\" stroke=\"" + color +
               "\"/>\n";
      // Quartile box and median.
      svg += "<rect x=\"" + fmt2(x - box_w / 2) + "\" y=\"" +
             fmt2(ypix(s.q3)) + "\" width=\"" + fmt2(box_w) +
             "\" height=\"" + fmt2(ypix(s.q1) - ypix(s.q3)) +
             "\" fill=\"" + color + "\" fill-opacity=\"0.25\" stroke=\"" +
             color + "\"/>\n";
      svg += "<line x1=\"" + fmt2(x - box_w / 2) + "\" y1=\"" +
             fmt2(ypix(s.med)) + "\" x2=\"" + fmt2(x + box_w / 2) +
             "\" y2=\"" + fmt2(ypix(s.med)) + "\" stroke=\"" + color +
             "\" stroke-width=\"2\"/>\n";
    }
  }

  // Legend.
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const double y = mt + 16.0 * static_cast<double>(mi);
    svg += "<rect x=\"" + fmt2(ml + plot_w - 92) + "\" y=\"" + fmt2(y) +
           "\" width=\"12\" height=\"12\" fill=\"" +
           method_color(methods[mi]) + "\"/>\n";
    svg += "<text x=\"" + fmt2(ml + plot_w - 76) + "\" y=\"" + fmt2(y + 10) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" +
           method_name(methods[mi]) + "</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

void emit_svg_boxplot(const BenchmarkResult& result, const std::string& metric,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << to_svg_boxplot(result, metric);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace dro::bench
