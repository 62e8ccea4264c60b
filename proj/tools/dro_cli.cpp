// Command-line front end: every subcommand reads one JSON config and drops
// result.csv + summary.json into --out.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dro/bench.hpp"
#include "dro/calibrate.hpp"
#include "dro/json_io.hpp"
#include "dro/oracle.hpp"
#include "dro/partition.hpp"
#include "dro/reformulate.hpp"

namespace {

using dro::json_io::json;

struct Options {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 1;
  double tol = 0.0;
  bool tol_given = false;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string join_decision(const dro::core::Vector& x) {
  std::string out;
  char buf[64];
  for (int i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", x(i));
    if (i) out += ';';
    out += buf;
  }
  return out;
}

std::uint64_t config_seed(const json& j, const Options& opt) {
  if (opt.seed_given) return opt.seed;
  if (j.contains("seed")) return j["seed"].get<std::uint64_t>();
  return 0;
}

int run_partition(const json& cfg, const Options& opt) {
  auto spec = dro::json_io::partition_spec_from(cfg, config_seed(cfg, opt));
  const std::uint64_t seed = config_seed(cfg, opt);

  int k = std::min<int>(spec.regions, static_cast<int>(spec.samples.size()));
  if (spec.elbow) {
    const int k_max = std::min<int>(spec.regions + 1,
                                    static_cast<int>(spec.samples.size()));
    k = dro::partition::elbow_select(spec.samples, k_max, seed);
  }
  auto model = dro::partition::kmeans(spec.samples, k, seed);
  auto tree = dro::partition::fit_axis_tree(
      spec.samples, model.labels, static_cast<int>(model.centroids.size()));
  auto scheme = dro::partition::regions(tree, spec.support);
  auto nominal = dro::partition::build_nominal(spec.samples, scheme);

  std::string csv = "region,count,weight,lower,upper\n";
  char buf[64];
  for (int i = 0; i < scheme.size(); ++i) {
    csv += std::to_string(i) + ',' + std::to_string(nominal.counts[i]) + ',';
    std::snprintf(buf, sizeof buf, "%.17g", nominal.weights(i));
    csv += buf;
    csv += ',' + join_decision(scheme.regions[i].lower) + ',' +
           join_decision(scheme.regions[i].upper) + '\n';
  }
  write_text(opt.out + "/result.csv", csv);

  json summary;
  summary["schema"] = 1;
  summary["samples"] = spec.samples.size();
  summary["regions"] = scheme.size();
  summary["scheme"] = dro::json_io::to_json(scheme);
  summary["weights"] = dro::json_io::to_json(nominal.weights);
  summary["counts"] = nominal.counts;
  dro::json_io::save_json(summary, opt.out + "/summary.json");
  return 0;
}

int run_solve(const json& cfg, const Options& opt) {
  auto spec = dro::json_io::solve_spec_from(cfg);
  dro::core::require_valid(spec.instance);

  const bool separable =
      spec.form == "separable" ||
      (spec.form == "auto" && spec.instance.objective.separable());
  auto built = separable
                   ? dro::reformulate::build_program_separable(spec.instance)
                   : dro::reformulate::build_program(spec.instance);
  if (spec.fixed_x) built.fix_decision(*spec.fixed_x);

  dro::reformulate::SolveOptions opts;
  if (opt.tol_given) {
    opts.tol = opt.tol;
    opts.accept_tol = std::max(opts.accept_tol, opt.tol);
  }
  const auto start = std::chrono::steady_clock::now();
  auto sol = dro::reformulate::solve(built.program, opts);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  const auto x = built.decision_of(sol);

  const char* status =
      sol.status == dro::reformulate::SolveStatus::optimal      ? "optimal"
      : sol.status == dro::reformulate::SolveStatus::infeasible ? "infeasible"
      : sol.status == dro::reformulate::SolveStatus::unbounded
          ? "unbounded"
          : "numerical_failure";

  char buf[64];
  std::string csv = "status,objective,iterations,solve_time,decision\n";
  csv += status;
  std::snprintf(buf, sizeof buf, ",%.17g,", sol.objective);
  csv += buf;
  csv += std::to_string(sol.iterations);
  std::snprintf(buf, sizeof buf, ",%.17g,", secs);
  csv += buf;
  csv += join_decision(x) + '\n';
  write_text(opt.out + "/result.csv", csv);

  json summary;
  summary["schema"] = 1;
  summary["status"] = status;
  summary["form"] = separable ? "separable" : "joint";
  summary["objective"] = sol.objective;
  summary["iterations"] = sol.iterations;
  summary["solve_time"] = secs;
  summary["decision"] = dro::json_io::to_json(x);
  if (!sol.diagnostic.empty()) summary["diagnostic"] = sol.diagnostic;
  dro::json_io::save_json(summary, opt.out + "/summary.json");
  return sol.status == dro::reformulate::SolveStatus::optimal ? 0 : 1;
}

int run_oracle(const json& cfg, const Options& opt) {
  auto spec = dro::json_io::oracle_spec_from(cfg);
  dro::core::require_valid(spec.instance);
  auto fi = dro::oracle::finite_relaxation(spec.instance, spec.extra_per_axis);
  auto wc = dro::oracle::worst_case_expectation(spec.x, fi);

  std::string csv = "region,weight,grid_points\n";
  char buf[64];
  for (int i = 0; i < wc.weights.size(); ++i) {
    csv += std::to_string(i) + ',';
    std::snprintf(buf, sizeof buf, "%.17g", wc.weights(i));
    csv += buf;
    csv += ',' + std::to_string(fi.grids[i].size()) + '\n';
  }
  write_text(opt.out + "/result.csv", csv);

  json summary;
  summary["schema"] = 1;
  summary["value"] = wc.value;
  summary["x"] = dro::json_io::to_json(spec.x);
  summary["weights"] = dro::json_io::to_json(wc.weights);
  summary["extra_per_axis"] = spec.extra_per_axis;
  dro::json_io::save_json(summary, opt.out + "/summary.json");
  return 0;
}

int run_tune(const json& cfg, const Options& opt) {
  const std::uint64_t seed = config_seed(cfg, opt);
  auto spec = dro::json_io::tune_spec_from(cfg, seed);
  try {
    auto result = dro::calibrate::bootstrap_tune(
        spec.sample, spec.method, spec.setup, spec.candidates, spec.beta,
        spec.kboot, seed, opt.jobs);
    write_text(opt.out + "/result.csv",
               dro::calibrate::tune_table_csv(result.table));
    json summary;
    summary["schema"] = 1;
    summary["selected_candidate"] = result.selected_candidate;
    summary["epsilon"] = result.selected.epsilon;
    summary["rho"] = result.selected.rho;
    summary["certificate"] = result.certificate;
    summary["decision"] = dro::json_io::to_json(result.decision);
    summary["threshold"] = result.threshold;
    summary["kboot"] = result.kboot;
    dro::json_io::save_json(summary, opt.out + "/summary.json");
    return 0;
  } catch (const dro::calibrate::NoReliableCandidate& e) {
    write_text(opt.out + "/result.csv",
               dro::calibrate::tune_table_csv(e.table));
    json summary;
    summary["schema"] = 1;
    summary["error"] = e.what();
    dro::json_io::save_json(summary, opt.out + "/summary.json");
    std::cerr << "tune: " << e.what() << "\n";
    return 1;
  }
}

int run_benchmark(const json& cfg, const Options& opt) {
  auto config = dro::json_io::benchmark_config_from(cfg);
  if (opt.seed_given) config.seed = opt.seed;
  if (opt.jobs > 1) config.jobs = opt.jobs;
  auto result = dro::bench::run_benchmark(config);
  dro::bench::emit_csv(result, opt.out + "/result.csv");
  dro::json_io::save_json(dro::json_io::benchmark_summary(config, result),
                          opt.out + "/summary.json");
  for (const char* metric :
       {"decision", "certificate", "actual_cost", "certificate_gap"}) {
    try {
      dro::bench::emit_svg_boxplot(result, metric,
                                   opt.out + '/' + metric + ".svg");
    } catch (const std::exception& e) {
      std::cerr << "benchmark: skipping " << metric << ".svg: " << e.what()
                << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partition-constrained distributionally robust optimization"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  Options opt;
  app.add_option("-c,--config", opt.config, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("-o,--out", opt.out, "output directory (created if missing)");
  auto* seed_flag =
      app.add_option("-s,--seed", opt.seed, "override the config seed");
  app.add_option("-j,--jobs", opt.jobs, "worker threads")
      ->check(CLI::PositiveNumber);
  auto* tol_flag = app.add_option(
      "--tol", opt.tol, "interior-point tolerance for the solve subcommand");

  auto* partition = app.add_subcommand(
      "partition", "cluster samples and fit an axis-aligned region tree");
  auto* solve = app.add_subcommand(
      "solve", "build and solve the robust program for one instance");
  auto* tune = app.add_subcommand(
      "tune", "bootstrap-select a budget pair from candidates");
  auto* oracle = app.add_subcommand(
      "oracle", "exact worst-case expectation at a fixed decision");
  auto* benchmark = app.add_subcommand(
      "benchmark", "out-of-sample method comparison over trial draws");

  CLI11_PARSE(app, argc, argv);
  opt.seed_given = seed_flag->count() > 0;
  opt.tol_given = tol_flag->count() > 0;

  try {
    std::filesystem::create_directories(opt.out);
    json cfg = dro::json_io::load_config(opt.config);
    if (partition->parsed()) return run_partition(cfg, opt);
    if (solve->parsed()) return run_solve(cfg, opt);
    if (tune->parsed()) return run_tune(cfg, opt);
    if (oracle->parsed()) return run_oracle(cfg, opt);
    if (benchmark->parsed()) return run_benchmark(cfg, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
