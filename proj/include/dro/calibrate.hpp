#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dro/core.hpp"

namespace dro::calibrate {

/// Chi-square inverse CDF by inverting the regularized incomplete gamma
/// function (bisection bracket, Newton polish). Absolute error <= 1e-6.
double chi2_quantile(int dof, double q);

/// Weight-deviation radius from the phi-divergence confidence set:
/// (phi''(1) / 2N) * chi2_quantile(I - 1, 1 - beta_p).
double radius_phi_divergence(int n, int regions, double beta_p,
                             double phi_dd1);

/// Weight-deviation radius from the total-variation concentration bound:
/// (I / sqrt(N)) * (2 + sqrt(2 log(I / beta_p))).
double radius_total_variation(int n, int regions, double beta_p);

/// Per-region transport radius from the conditional concentration bound.
/// Large samples (N_i >= log(B/beta)/C) use exponent 1/max(dim, 2); small
/// samples use 1/a. dim = 2 is outside the bound and rejected. B and C are
/// placeholders defaulting to 1; override them for quantitative use.
double epsilon_concentration(int n_i, double beta_i, int dim, double a_i,
                             double B_i = 1.0, double C_i = 1.0);

/// Mixture radius: sum_i p_i eps_i.
double combined_epsilon(const core::Vector& p,
                        const std::vector<double>& eps_list);

struct Metrics {
  double certificate_gap = 0.0;  // actual - certificate
  bool reliable = false;         // gap <= 0
};

Metrics metrics(double actual_cost, double certificate);

/// Resamples a candidate must survive: ceil((1 - beta) * kboot), guarded
/// against representation noise in the product.
int screen_threshold(double beta, int kboot);

enum class TuneMethod { droc, drow };

struct TuneCandidate {
  double epsilon = 0.0;
  double rho = 0.0;  // ignored by drow
};

struct TuneSetup {
  core::PiecewiseObjective objective;
  core::DecisionSpec decision;
  core::PartitionScheme scheme;  // drow uses only scheme.support
  cones::OrderCone cone;         // droc only
};

struct TuneRow {
  int candidate = -1;
  double epsilon = 0.0;
  double rho = 0.0;
  int screen_count = 0;
  double mean_validation = 0.0;
  bool filtered = false;  // radius below the feasible floor on some resample
  bool selected = false;
};

struct TuneResult {
  int selected_candidate = -1;
  TuneCandidate selected;
  core::Vector decision;      // full-sample re-solve with the winner
  double certificate = 0.0;
  std::vector<TuneRow> table;
  int threshold = 0;
  int kboot = 0;
};

struct NoReliableCandidate : std::runtime_error {
  explicit NoReliableCandidate(const std::string& what,
                               std::vector<TuneRow> rows)
      : std::runtime_error(what), table(std::move(rows)) {}
  std::vector<TuneRow> table;
};

/// Bootstrap parameter selection: kboot with-replacement resamples with
/// out-of-bag validation; candidates pass the screen when the certificate
/// covers the validation cost in at least screen_threshold(beta, kboot)
/// resamples; the survivor with the lowest mean validation cost wins and is
/// re-solved on the full sample. Bit-reproducible for a fixed seed and
/// independent of the worker count.
TuneResult bootstrap_tune(const core::SampleSet& sample, TuneMethod method,
                          const TuneSetup& setup,
                          const std::vector<TuneCandidate>& candidates,
                          double beta, int kboot, std::uint64_t seed,
                          int jobs = 1);

/// candidate_id, epsilon, rho, screen_count, mean_validation_cost, selected
std::string tune_table_csv(const std::vector<TuneRow>& table);

}  // namespace dro::calibrate
