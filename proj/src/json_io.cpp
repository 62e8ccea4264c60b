#include "dro/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "dro/partition.hpp"
#include "dro/rng.hpp"

namespace dro::json_io {

namespace {

[[noreturn]] void bad(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing field \"") + key + "\"");
  return *it;
}

double num_or(const json& j, const char* key, double fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : number_from(*it);
}

int int_of(const json& j) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    bad("expected an integer, got " + j.dump());
  return j.get<int>();
}

json number_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return json(v);
}

}  // namespace

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return j;
}

json load_config(const std::string& path) {
  json j = load_json(path);
  if (!j.is_object()) bad("top level must be an object");
  auto it = j.find("schema");
  if (it == j.end()) bad("missing \"schema\" field");
  if (!it->is_number_integer() || it->get<int>() != 1)
    bad("unsupported schema version " + it->dump() + " (expected 1)");
  return j;
}

void save_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

double number_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf")
      return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  bad("expected a number (or \"inf\"/\"-inf\"), got " + j.dump());
}

json to_json(const core::Vector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(number_to_json(v(i)));
  return out;
}

core::Vector vector_from(const json& j) {
  if (!j.is_array()) bad("expected an array, got " + j.dump());
  core::Vector v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = number_from(j[i]);
  return v;
}

json to_json(const core::Matrix& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(number_to_json(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

core::Matrix matrix_from(const json& j) {
  if (!j.is_array()) bad("expected an array of rows, got " + j.dump());
  const int rows = static_cast<int>(j.size());
  if (rows == 0) return core::Matrix(0, 0);
  const int cols = static_cast<int>(j[0].size());
  core::Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) bad("ragged matrix rows");
    for (int c = 0; c < cols; ++c) m(r, c) = number_from(j[r][c]);
  }
  return m;
}

json to_json(const core::Box& b) {
  return {{"lower", to_json(b.lower)}, {"upper", to_json(b.upper)}};
}

core::Box box_from(const json& j) {
  core::Box b;
  b.lower = vector_from(field(j, "lower"));
  b.upper = vector_from(field(j, "upper"));
  if (b.lower.size() != b.upper.size()) bad("box bound sizes differ");
  return b;
}

json to_json(const core::SampleSet& samples) {
  json out = json::array();
  for (const auto& s : samples) out.push_back(to_json(s));
  return out;
}

core::SampleSet samples_from(const json& j) {
  if (!j.is_array()) bad("expected an array of points");
  core::SampleSet out;
  out.reserve(j.size());
  for (const auto& p : j) out.push_back(vector_from(p));
  return out;
}

json to_json(const cones::OrderCone& cone) {
  return {{"kind", cones::kind_name(cone.kind)},
          {"matrix", to_json(cone.matrix)},
          {"dim", cone.dim()}};
}

cones::OrderCone cone_from(const json& j) {
  cones::OrderCone cone;
  const std::string kind =
      j.contains("kind") ? field(j, "kind").get<std::string>() : "custom";
  if (j.contains("matrix")) {
    cone.matrix = matrix_from(field(j, "matrix"));
    if (j.contains("dim") && int_of(field(j, "dim")) != cone.dim())
      bad("cone dim disagrees with its matrix");
    cone.kind = cones::Kind::custom;
    for (cones::Kind k :
         {cones::Kind::trivial, cones::Kind::simple, cones::Kind::tree,
          cones::Kind::star, cones::Kind::umbrella, cones::Kind::ratio})
      if (kind == cones::kind_name(k)) cone.kind = k;
  } else if (kind == "trivial") {
    cone = cones::trivial_cone(int_of(field(j, "dim")));
  } else if (kind == "simple") {
    cone = cones::simple_order(int_of(field(j, "dim")));
  } else if (kind == "tree") {
    cone = cones::tree_order(int_of(field(j, "dim")));
  } else if (kind == "star") {
    cone = cones::star_shaped(int_of(field(j, "dim")));
  } else if (kind == "umbrella") {
    cone = cones::umbrella(int_of(field(j, "dim")),
                           int_of(field(j, "mode")));
  } else if (kind == "ratio") {
    std::vector<double> ratios;
    for (const auto& r : field(j, "ratios")) ratios.push_back(number_from(r));
    cone = cones::ratio_cone(ratios, num_or(j, "tolerance", 0.0));
  } else {
    bad("unknown cone kind \"" + kind + "\"");
  }
  if (j.contains("permute")) {
    std::vector<int> perm;
    for (const auto& p : field(j, "permute")) perm.push_back(int_of(p));
    cone = cones::permute(cone, perm);
  }
  return cone;
}

namespace {

json piece_to_json(const core::AffinePiece& piece) {
  json out;
  out["slope"] = {{"coef", to_json(piece.slope.coef)},
                  {"offset", to_json(piece.slope.offset)}};
  json intercept;
  if (!piece.intercept.is_affine())
    intercept["quad"] = to_json(piece.intercept.quad);
  intercept["linear"] = to_json(piece.intercept.linear);
  intercept["constant"] = piece.intercept.constant;
  out["intercept"] = intercept;
  return out;
}

core::AffinePiece piece_from(const json& j) {
  core::AffinePiece piece;
  const json& slope = field(j, "slope");
  piece.slope.coef = matrix_from(field(slope, "coef"));
  piece.slope.offset = vector_from(field(slope, "offset"));
  const json& intercept = field(j, "intercept");
  piece.intercept.linear = vector_from(field(intercept, "linear"));
  piece.intercept.constant = num_or(intercept, "constant", 0.0);
  piece.intercept.quad =
      intercept.contains("quad")
          ? matrix_from(field(intercept, "quad"))
          : core::Matrix::Zero(piece.intercept.dim(), piece.intercept.dim());
  return piece;
}

}  // namespace

json to_json(const core::PiecewiseObjective& obj) {
  json out;
  if (obj.separable()) {
    json blocks = json::array();
    for (const auto& block : obj.blocks) {
      json pieces = json::array();
      for (const auto& piece : block) pieces.push_back(piece_to_json(piece));
      blocks.push_back(std::move(pieces));
    }
    out["blocks"] = blocks;
  } else {
    json pieces = json::array();
    for (const auto& piece : obj.pieces) pieces.push_back(piece_to_json(piece));
    out["pieces"] = pieces;
  }
  return out;
}

core::PiecewiseObjective objective_from(const json& j) {
  if (j.contains("kind")) {
    const std::string kind = field(j, "kind").get<std::string>();
    if (kind == "newsvendor")
      return bench::newsvendor_objective(number_from(field(j, "h")),
                                         number_from(field(j, "b")));
    if (kind == "newsvendor_multi")
      return bench::newsvendor_objective(vector_from(field(j, "h")),
                                         vector_from(field(j, "b")));
    if (kind == "cournot") return bench::cournot_objective();
    bad("unknown objective kind \"" + kind + "\"");
  }
  core::PiecewiseObjective obj;
  if (j.contains("pieces")) {
    for (const auto& p : field(j, "pieces")) obj.pieces.push_back(piece_from(p));
  } else if (j.contains("blocks")) {
    for (const auto& block : field(j, "blocks")) {
      std::vector<core::AffinePiece> pieces;
      for (const auto& p : block) pieces.push_back(piece_from(p));
      obj.blocks.push_back(std::move(pieces));
    }
  } else {
    bad("objective needs \"kind\", \"pieces\", or \"blocks\"");
  }
  return obj;
}

json to_json(const core::DecisionSpec& spec) {
  json out;
  out["bounds"] = to_json(spec.bounds);
  if (!spec.constraints.empty()) {
    json rows = json::array();
    for (const auto& c : spec.constraints) {
      const char* sense = c.sense == core::Sense::le   ? "le"
                          : c.sense == core::Sense::ge ? "ge"
                                                       : "eq";
      rows.push_back({{"coeffs", to_json(c.coeffs)},
                      {"sense", sense},
                      {"rhs", c.rhs}});
    }
    out["constraints"] = rows;
  }
  return out;
}

core::DecisionSpec decision_from(const json& j) {
  core::DecisionSpec spec;
  spec.bounds = box_from(field(j, "bounds"));
  if (j.contains("constraints"))
    for (const auto& row : field(j, "constraints")) {
      core::LinearConstraint c;
      c.coeffs = vector_from(field(row, "coeffs"));
      const std::string sense = field(row, "sense").get<std::string>();
      if (sense == "le")
        c.sense = core::Sense::le;
      else if (sense == "ge")
        c.sense = core::Sense::ge;
      else if (sense == "eq")
        c.sense = core::Sense::eq;
      else
        bad("unknown constraint sense \"" + sense + "\"");
      c.rhs = number_from(field(row, "rhs"));
      spec.constraints.push_back(std::move(c));
    }
  return spec;
}

json to_json(const core::PartitionScheme& scheme) {
  json out;
  out["support"] = to_json(scheme.support);
  json regions = json::array();
  for (const auto& r : scheme.regions) regions.push_back(to_json(r));
  out["regions"] = regions;
  if (!scheme.tree.empty()) {
    json tree = json::array();
    for (const auto& node : scheme.tree)
      tree.push_back({{"feature", node.feature},
                      {"threshold", node.threshold},
                      {"left", node.left},
                      {"right", node.right},
                      {"region", node.region}});
    out["tree"] = tree;
  }
  return out;
}

core::PartitionScheme partition_from(const json& j) {
  core::PartitionScheme scheme;
  scheme.support = box_from(field(j, "support"));
  for (const auto& r : field(j, "regions"))
    scheme.regions.push_back(box_from(r));
  if (j.contains("tree"))
    for (const auto& n : field(j, "tree")) {
      core::SplitNode node;
      node.feature = int_of(field(n, "feature"));
      node.threshold = number_from(field(n, "threshold"));
      node.left = int_of(field(n, "left"));
      node.right = int_of(field(n, "right"));
      node.region = int_of(field(n, "region"));
      scheme.tree.push_back(node);
    }
  return scheme;
}

json to_json(const bench::MixtureSpec& spec) {
  json means = json::array(), variances = json::array();
  for (const auto& m : spec.means) means.push_back(to_json(m));
  for (const auto& v : spec.variances) variances.push_back(to_json(v));
  return {{"means", means},
          {"variances", variances},
          {"weights", spec.weights},
          {"support", to_json(spec.support)}};
}

bench::MixtureSpec mixture_from(const json& j) {
  bench::MixtureSpec spec;
  for (const auto& m : field(j, "means")) spec.means.push_back(vector_from(m));
  for (const auto& v : field(j, "variances"))
    spec.variances.push_back(vector_from(v));
  for (const auto& w : field(j, "weights"))
    spec.weights.push_back(number_from(w));
  spec.support = box_from(field(j, "support"));
  return spec;
}

bench::BenchmarkConfig benchmark_config_from(const json& j) {
  bench::BenchmarkConfig cfg;
  if (j.contains("preset")) {
    const std::string preset = field(j, "preset").get<std::string>();
    if (preset == "single_item_newsvendor")
      cfg = bench::single_item_benchmark();
    else if (preset == "multi_item_newsvendor")
      cfg = bench::multi_item_benchmark();
    else if (preset == "cournot")
      cfg = bench::cournot_benchmark();
    else
      bad("unknown benchmark preset \"" + preset + "\"");
  } else {
    cfg.methods = {bench::Method::droc, bench::Method::drow,
                   bench::Method::saa};
  }

  if (j.contains("problem"))
    cfg.problem = field(j, "problem").get<std::string>();
  if (j.contains("mixture")) cfg.mixture = mixture_from(field(j, "mixture"));
  if (j.contains("objective"))
    cfg.objective = objective_from(field(j, "objective"));
  if (j.contains("decision"))
    cfg.decision = decision_from(field(j, "decision"));
  if (!j.contains("preset")) {
    if (!j.contains("mixture") || !j.contains("objective") ||
        !j.contains("decision"))
      bad("benchmark without a preset needs mixture, objective, decision");
  }
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : field(j, "methods"))
      cfg.methods.push_back(bench::method_from_name(m.get<std::string>()));
  }
  if (j.contains("sample_sizes")) {
    cfg.sample_sizes.clear();
    for (const auto& n : field(j, "sample_sizes"))
      cfg.sample_sizes.push_back(int_of(n));
  }
  if (j.contains("trials")) cfg.trials = int_of(field(j, "trials"));
  if (j.contains("seed")) cfg.seed = field(j, "seed").get<std::uint64_t>();
  if (j.contains("pool_size")) cfg.pool_size = int_of(field(j, "pool_size"));
  if (j.contains("regions")) cfg.regions = int_of(field(j, "regions"));
  if (j.contains("elbow")) cfg.elbow = field(j, "elbow").get<bool>();
  if (j.contains("cone_tolerance"))
    cfg.cone_tolerance = number_from(field(j, "cone_tolerance"));
  if (j.contains("source")) {
    const std::string source = field(j, "source").get<std::string>();
    if (source == "table")
      cfg.source = bench::ParameterSource::table;
    else if (source == "formulas")
      cfg.source = bench::ParameterSource::formulas;
    else if (source == "bootstrap")
      cfg.source = bench::ParameterSource::bootstrap;
    else
      bad("unknown parameter source \"" + source + "\"");
  }
  if (j.contains("table")) {
    cfg.table.clear();
    for (const auto& [key, entry] : field(j, "table").items()) {
      bench::ScheduleEntry e;
      e.droc_epsilon = num_or(entry, "droc_epsilon", 0.0);
      e.droc_rho = num_or(entry, "droc_rho", 0.0);
      e.drow_rho = num_or(entry, "drow_rho", 0.0);
      cfg.table[std::stoi(key)] = e;
    }
  }
  if (j.contains("beta")) cfg.beta = number_from(field(j, "beta"));
  if (j.contains("tail_exponent"))
    cfg.tail_exponent = number_from(field(j, "tail_exponent"));
  if (j.contains("candidates")) {
    cfg.candidates.clear();
    for (const auto& c : field(j, "candidates"))
      cfg.candidates.push_back({num_or(c, "epsilon", 0.0),
                                num_or(c, "rho", 0.0)});
  }
  if (j.contains("kboot")) cfg.kboot = int_of(field(j, "kboot"));
  if (j.contains("jobs")) cfg.jobs = int_of(field(j, "jobs"));
  return cfg;
}

json benchmark_summary(const bench::BenchmarkConfig& cfg,
                       const bench::BenchmarkResult& result) {
  json out;
  out["schema"] = 1;
  out["problem"] = cfg.problem;
  out["seed"] = cfg.seed;
  out["trials"] = cfg.trials;
  out["pool_size"] = cfg.pool_size;
  json methods = json::array();
  for (auto m : cfg.methods) methods.push_back(bench::method_name(m));
  out["methods"] = methods;
  out["sample_sizes"] = cfg.sample_sizes;
  out["reference"] = {{"cost", result.reference_cost},
                      {"decision", to_json(result.reference_decision)}};

  auto median = [](std::vector<double> v) -> json {
    if (v.empty()) return nullptr;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };

  json groups = json::array();
  for (auto m : cfg.methods)
    for (int n : cfg.sample_sizes) {
      int ok = 0, failed = 0, infeasible = 0, reliable = 0;
      double time_total = 0.0;
      std::vector<double> costs, certs, gaps;
      for (const auto& row : result.rows) {
        if (row.method != m || row.sample_size != n) continue;
        time_total += row.solve_time;
        if (row.status == "ok") {
          ++ok;
          costs.push_back(row.actual_cost);
          certs.push_back(row.certificate);
          gaps.push_back(row.certificate_gap);
          if (row.certificate_gap <= 0.0) ++reliable;
        } else if (row.status == "infeasible_config") {
          ++infeasible;
        } else {
          ++failed;
        }
      }
      const int total = ok + failed + infeasible;
      json g;
      g["method"] = bench::method_name(m);
      g["sample_size"] = n;
      g["rows"] = total;
      g["ok"] = ok;
      g["failed"] = failed;
      g["infeasible_config"] = infeasible;
      g["reliability"] =
          ok > 0 ? json(static_cast<double>(reliable) / ok) : json(nullptr);
      g["median_actual_cost"] = median(std::move(costs));
      g["median_certificate"] = median(std::move(certs));
      g["median_certificate_gap"] = median(std::move(gaps));
      g["mean_solve_time"] =
          total > 0 ? json(time_total / total) : json(nullptr);
      groups.push_back(std::move(g));
    }
  out["groups"] = groups;
  return out;
}

namespace {

/// Instance shared by the solve / oracle payloads.
core::Instance instance_from(const json& j) {
  core::Instance inst;
  inst.decision = decision_from(field(j, "decision"));
  inst.objective = objective_from(field(j, "objective"));
  inst.partition = partition_from(field(j, "partition"));
  inst.nominal = partition::build_nominal(samples_from(field(j, "samples")),
                                          inst.partition);
  inst.ambiguity.epsilon = num_or(j, "epsilon", 0.0);
  inst.ambiguity.rho = num_or(j, "rho", 0.0);
  inst.ambiguity.cone = j.contains("cone")
                            ? cone_from(field(j, "cone"))
                            : cones::trivial_cone(inst.partition.size());
  return inst;
}

core::SampleSet spec_samples(const json& j, std::uint64_t seed) {
  if (j.contains("samples")) return samples_from(field(j, "samples"));
  if (j.contains("mixture"))
    return bench::sample_truncated_mixture(mixture_from(field(j, "mixture")),
                                           int_of(field(j, "n")), seed);
  bad("need \"samples\" or \"mixture\" plus \"n\"");
}

}  // namespace

SolveSpec solve_spec_from(const json& j) {
  SolveSpec spec;
  spec.instance = instance_from(j);
  if (j.contains("form")) {
    spec.form = field(j, "form").get<std::string>();
    if (spec.form != "auto" && spec.form != "joint" &&
        spec.form != "separable")
      bad("form must be auto, joint, or separable");
  }
  if (j.contains("fix_x")) spec.fixed_x = vector_from(field(j, "fix_x"));
  return spec;
}

OracleSpec oracle_spec_from(const json& j) {
  OracleSpec spec;
  spec.instance = instance_from(j);
  spec.x = vector_from(field(j, "x"));
  spec.extra_per_axis = j.contains("extra_per_axis")
                            ? int_of(field(j, "extra_per_axis"))
                            : 0;
  return spec;
}

TuneSpec tune_spec_from(const json& j, std::uint64_t seed) {
  TuneSpec spec;
  const std::string method = field(j, "method").get<std::string>();
  if (method == "droc")
    spec.method = calibrate::TuneMethod::droc;
  else if (method == "drow")
    spec.method = calibrate::TuneMethod::drow;
  else
    bad("tune method must be droc or drow");
  spec.setup.objective = objective_from(field(j, "objective"));
  spec.setup.decision = decision_from(field(j, "decision"));
  spec.setup.scheme = partition_from(field(j, "partition"));
  spec.setup.cone = j.contains("cone")
                        ? cone_from(field(j, "cone"))
                        : cones::trivial_cone(spec.setup.scheme.size());
  spec.sample = spec_samples(j, seed);
  for (const auto& c : field(j, "candidates"))
    spec.candidates.push_back(
        {num_or(c, "epsilon", 0.0), num_or(c, "rho", 0.0)});
  spec.beta = num_or(j, "beta", 0.05);
  if (j.contains("kboot")) spec.kboot = int_of(field(j, "kboot"));
  return spec;
}

PartitionSpec partition_spec_from(const json& j, std::uint64_t seed) {
  PartitionSpec spec;
  spec.samples = spec_samples(j, seed);
  if (j.contains("support"))
    spec.support = box_from(field(j, "support"));
  else if (j.contains("mixture"))
    spec.support = mixture_from(field(j, "mixture")).support;
  else
    bad("partition needs a support box (or a mixture that carries one)");
  if (j.contains("regions")) spec.regions = int_of(field(j, "regions"));
  if (j.contains("elbow")) spec.elbow = field(j, "elbow").get<bool>();
  return spec;
}

}  // namespace dro::json_io
