#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "dro/bench.hpp"
#include "dro/calibrate.hpp"
#include "dro/core.hpp"

namespace dro::json_io {

using json = nlohmann::json;

/// Parse a JSON file; errors carry the path.
json load_json(const std::string& path);

/// load_json plus a `"schema": 1` check.
json load_config(const std::string& path);

void save_json(const json& j, const std::string& path);

// Scalars may be numbers or the strings "inf" / "+inf" / "-inf", since JSON
// itself has no spelling for infinities.
double number_from(const json& j);

json to_json(const core::Vector& v);
core::Vector vector_from(const json& j);
json to_json(const core::Matrix& m);
core::Matrix matrix_from(const json& j);

json to_json(const core::Box& b);
core::Box box_from(const json& j);

json to_json(const core::SampleSet& samples);
core::SampleSet samples_from(const json& j);

/// {"kind": name, ...}: named families take "dim" (umbrella also "mode",
/// ratio takes "ratios"/"tolerance", custom takes "matrix"); an explicit
/// "matrix" always wins. Optional "permute" reindexes afterwards.
json to_json(const cones::OrderCone& cone);
cones::OrderCone cone_from(const json& j);

/// Generic form {"pieces": [...]} or {"blocks": [[...], ...]}, or a named
/// shorthand {"kind": "newsvendor" | "newsvendor_multi" | "cournot", ...}.
json to_json(const core::PiecewiseObjective& obj);
core::PiecewiseObjective objective_from(const json& j);

json to_json(const core::DecisionSpec& spec);
core::DecisionSpec decision_from(const json& j);

/// {"support": box, "regions": [box...], "tree": [node...]}; the tree is
/// optional and preserves tie-breaks at shared region boundaries.
json to_json(const core::PartitionScheme& scheme);
core::PartitionScheme partition_from(const json& j);

json to_json(const bench::MixtureSpec& spec);
bench::MixtureSpec mixture_from(const json& j);

/// Benchmark node: optional "preset" (single_item_newsvendor |
/// multi_item_newsvendor | cournot) establishes a baseline; any other keys
/// override individual fields.
bench::BenchmarkConfig benchmark_config_from(const json& j);

/// Per-(method, N) aggregates plus the full-information reference.
json benchmark_summary(const bench::BenchmarkConfig& cfg,
                       const bench::BenchmarkResult& result);

/// `solve` subcommand payload: an instance assembled from decision,
/// objective, partition, samples, and budgets, with an optional pinned
/// decision and an explicit or auto-detected program form.
struct SolveSpec {
  core::Instance instance;
  std::string form = "auto";  // auto | joint | separable
  std::optional<core::Vector> fixed_x;
};
SolveSpec solve_spec_from(const json& j);

/// `oracle` subcommand payload: instance, evaluation point, grid refinement.
struct OracleSpec {
  core::Instance instance;
  core::Vector x;
  int extra_per_axis = 0;
};
OracleSpec oracle_spec_from(const json& j);

/// `tune` subcommand payload. Samples may be inline or drawn from a mixture
/// ("mixture" + "n"), in which case `seed` feeds the sampler.
struct TuneSpec {
  calibrate::TuneMethod method = calibrate::TuneMethod::droc;
  calibrate::TuneSetup setup;
  core::SampleSet sample;
  std::vector<calibrate::TuneCandidate> candidates;
  double beta = 0.05;
  int kboot = 50;
};
TuneSpec tune_spec_from(const json& j, std::uint64_t seed);

/// `partition` subcommand payload.
struct PartitionSpec {
  core::SampleSet samples;
  core::Box support;
  int regions = 4;
  bool elbow = false;
};
PartitionSpec partition_spec_from(const json& j, std::uint64_t seed);

}  // namespace dro::json_io
