#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dro/calibrate.hpp"
#include "dro/core.hpp"

namespace dro::bench {

/// Gaussian mixture with diagonal covariances, truncated to a box.
struct MixtureSpec {
  std::vector<core::Vector> means;
  std::vector<core::Vector> variances;  // diagonal entries, all > 0
  std::vector<double> weights;          // simplex
  core::Box support;

  int dim() const { return support.dim(); }
  int components() const { return static_cast<int>(weights.size()); }
};

/// Demand on [0,1]: modes near 0.2 / 0.5 / 0.8 with most mass on the right.
MixtureSpec single_item_demand();

/// Twenty-dimensional demand on [0,10]^20, three diagonal Gaussian modes.
MixtureSpec multi_item_demand();

/// Effective market signal on [-1.8, 3] for the quadratic producer problem.
MixtureSpec cournot_signal();

/// Rejection sampler: pick a component by weight, draw the Gaussian, keep
/// the point iff it lies in the support box. Deterministic under `seed`.
/// Gives up with a runtime_error after 10^7 rejected draws.
core::SampleSet sample_truncated_mixture(const MixtureSpec& spec, int n,
                                         std::uint64_t seed);

/// max{ h (x - xi), b (xi - x) }: overage cost h, underage cost b.
core::PiecewiseObjective newsvendor_objective(double h, double b);

/// Sum over items of the scalar newsvendor loss; one block per item.
core::PiecewiseObjective newsvendor_objective(const core::Vector& h,
                                              const core::Vector& b);

/// Producer profit loss (-x) xi + x^2 for x in [0,1].
core::PiecewiseObjective cournot_objective();

enum class Method { droc, drow, saa };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

/// Per-N budget schedule: transport and weight budgets for the partitioned
/// model, ball radius for the single-region one.
struct ScheduleEntry {
  double droc_epsilon = 0.0;
  double droc_rho = 0.0;
  double drow_rho = 0.0;
};
using ParameterTable = std::map<int, ScheduleEntry>;

ParameterTable single_item_schedule();
ParameterTable multi_item_schedule();

enum class ParameterSource { table, formulas, bootstrap };

struct BenchmarkConfig {
  std::string problem = "custom";
  MixtureSpec mixture;
  core::PiecewiseObjective objective;
  core::DecisionSpec decision;
  std::vector<Method> methods;
  std::vector<int> sample_sizes;
  int trials = 0;
  std::uint64_t seed = 0;
  int pool_size = 15000;

  // Partitioned-model construction (per trial, from that trial's sample).
  int regions = 4;     // fixed cluster count, or the cap in elbow mode
  bool elbow = false;  // pick the cluster count by the distortion knee
  double cone_tolerance = 0.1;

  ParameterSource source = ParameterSource::table;
  ParameterTable table;        // source == table
  double beta = 0.05;          // confidence parameter (formulas / bootstrap)
  double tail_exponent = 2.0;  // formulas: light-tail exponent a > 1
  std::vector<calibrate::TuneCandidate> candidates;  // source == bootstrap
  int kboot = 50;

  int jobs = 1;
};

/// Full experiment presets (mixture, objective, schedule, trial counts).
BenchmarkConfig single_item_benchmark();
BenchmarkConfig multi_item_benchmark();
BenchmarkConfig cournot_benchmark();

struct BenchmarkRow {
  Method method = Method::saa;
  int sample_size = 0;
  int trial = 0;
  std::string status;  // ok | infeasible_config | failed
  core::Vector decision;
  double certificate = 0.0;
  double actual_cost = 0.0;
  double certificate_gap = 0.0;  // actual - certificate
  double solve_time = 0.0;       // wall-clock seconds; not reproducible
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;       // one per (method, N, trial)
  core::Vector reference_decision;      // pool optimum x*
  double reference_cost = 0.0;          // pool cost of x* (J*)
};

/// Runs the trial grid. The ground-truth pool is drawn once from the config
/// seed; every trial of every method is scored against it. Trial work items
/// carry their own substreams, so results do not depend on `jobs`. Solver
/// trouble inside a trial becomes a `failed` row; a weight budget below the
/// feasible floor for a table/formulas trial becomes `infeasible_config`.
BenchmarkResult run_benchmark(const BenchmarkConfig& config);

/// Mean of objective(x, xi) over the given points.
double average_cost(const core::PiecewiseObjective& objective,
                    const core::Vector& x, const core::SampleSet& points);

/// CSV with two leading `#` metadata lines (reference cost and decision)
/// and one row per BenchmarkRow. Numbers use %.17g so parsing returns the
/// exact doubles; decision vectors pack into one field with ';'.
std::string to_csv(const BenchmarkResult& result);
BenchmarkResult parse_csv_text(const std::string& text);
void emit_csv(const BenchmarkResult& result, const std::string& path);
BenchmarkResult parse_csv(const std::string& path);

/// Drops the solve_time column, which is the one field wall clocks make
/// nondeterministic; what remains must be byte-identical across reruns.
std::string strip_solve_time(const std::string& csv);

/// One box per (method, N) cluster: median, quartile box, 1.5 IQR whiskers,
/// plus a dashed reference line (pool optimum for cost metrics, zero for the
/// gap). metric: decision | certificate | actual_cost | certificate_gap.
std::string to_svg_boxplot(const BenchmarkResult& result,
                           const std::string& metric);
void emit_svg_boxplot(const BenchmarkResult& result, const std::string& metric,
                      const std::string& path);

}  // namespace dro::bench
