#include <doctest.h>

#include <cmath>

#include "dro/calibrate.hpp"
#include "dro/partition.hpp"
#include "dro/rng.hpp"
#include "helpers.hpp"

using namespace dro;
using namespace dro::calibrate;

TEST_CASE("chi-square quantiles hit table values") {
  CHECK(chi2_quantile(3, 0.95) == doctest::Approx(7.8147).epsilon(1e-4));
  CHECK(chi2_quantile(2, 0.5) ==
        doctest::Approx(-2.0 * std::log(0.5)).epsilon(1e-8));
  CHECK(chi2_quantile(1, 0.95) == doctest::Approx(3.8415).epsilon(1e-4));
  CHECK(chi2_quantile(10, 0.99) == doctest::Approx(23.2093).epsilon(1e-4));
  CHECK_THROWS_AS(chi2_quantile(0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(chi2_quantile(3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(chi2_quantile(3, 1.0), std::invalid_argument);
}

TEST_CASE("chi-square quantiles increase in q and in dof") {
  for (int dof = 1; dof <= 8; ++dof) {
    double prev = 0.0;
    for (double q : {0.05, 0.25, 0.5, 0.75, 0.9, 0.99}) {
      double val = chi2_quantile(dof, q);
      CHECK(val > prev);
      prev = val;
      if (dof > 1) CHECK(val > chi2_quantile(dof - 1, q));
    }
  }
}

TEST_CASE("divergence-based weight radius") {
  CHECK(radius_phi_divergence(100, 4, 0.05, 2.0) ==
        doctest::Approx(0.0781).epsilon(1e-3));
  CHECK(radius_phi_divergence(400, 4, 0.05, 2.0) ==
        doctest::Approx(radius_phi_divergence(100, 4, 0.05, 2.0) / 4.0)
            .epsilon(1e-10));
  CHECK(radius_phi_divergence(1, 2, 0.05, 2.0) ==
        doctest::Approx(3.8415).epsilon(1e-4));
  CHECK_THROWS_AS(radius_phi_divergence(100, 1, 0.05, 2.0),
                  std::invalid_argument);
}

TEST_CASE("total-variation weight radius") {
  CHECK(radius_total_variation(100, 4, 0.05) ==
        doctest::Approx(1.9842).epsilon(1e-3));
  CHECK(radius_total_variation(400, 4, 0.05) ==
        doctest::Approx(radius_total_variation(100, 4, 0.05) / 2.0)
            .epsilon(1e-10));
  CHECK(radius_total_variation(1, 1, 0.5) ==
        doctest::Approx(2.0 + std::sqrt(2.0 * std::log(2.0))).epsilon(1e-10));
}

TEST_CASE("radius formulas shrink with data and grow with confidence") {
  double prev_phi = 1e300, prev_tv = 1e300;
  for (int n : {10, 40, 160, 640}) {
    double phi = radius_phi_divergence(n, 4, 0.05, 2.0);
    double tv = radius_total_variation(n, 4, 0.05);
    CHECK(phi < prev_phi);
    CHECK(tv < prev_tv);
    prev_phi = phi;
    prev_tv = tv;
  }
  CHECK(radius_phi_divergence(100, 4, 0.01, 2.0) >
        radius_phi_divergence(100, 4, 0.10, 2.0));
  CHECK(radius_total_variation(100, 4, 0.01) >
        radius_total_variation(100, 4, 0.10));
}

TEST_CASE("conditional transport radius branches on the sample size") {
  CHECK(epsilon_concentration(100, 0.05, 1, 3.0) ==
        doctest::Approx(0.1731).epsilon(1e-3));
  CHECK(epsilon_concentration(1, 0.05, 1, 2.0) ==
        doctest::Approx(1.7309).epsilon(1e-3));
  // at beta = B the radius collapses
  CHECK(epsilon_concentration(50, 1.0, 1, 2.0) == doctest::Approx(0.0));
  // high dimension uses 1/dim in the large-sample branch
  CHECK(epsilon_concentration(100, 0.05, 3, 4.0) ==
        doctest::Approx(std::pow(std::log(20.0) / 100.0, 1.0 / 3)));
  CHECK_THROWS_AS(epsilon_concentration(100, 0.05, 2, 3.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(epsilon_concentration(100, 0.05, 1, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(epsilon_concentration(100, 2.0, 1, 3.0),
                  std::invalid_argument);
}

TEST_CASE("mixture radius is the weighted sum") {
  CHECK(combined_epsilon(th::vec({0.5, 0.5}), {0.1, 0.3}) ==
        doctest::Approx(0.2));
  CHECK(combined_epsilon(th::vec({1.0, 0.0}), {0.7, 9.0}) ==
        doctest::Approx(0.7));
  auto scheme = th::interval_cells(0, 1, 4);
  auto nominal = partition::build_nominal(
      th::samples1({0.1, 0.2, 0.3, 0.4, 0.6, 0.9}), scheme);
  std::vector<double> eps = {0.1, 0.2, 0.3, 0.4};
  double expect = 0.0;
  for (int i = 0; i < 4; ++i) expect += nominal.weights(i) * eps[i];
  CHECK(combined_epsilon(nominal.weights, eps) == doctest::Approx(expect));
  CHECK_THROWS_AS(combined_epsilon(th::vec({0.5, 0.4}), {0.1, 0.2}),
                  std::invalid_argument);
}

TEST_CASE("out-of-sample metrics") {
  auto m1 = metrics(10.0, 12.0);
  CHECK(m1.certificate_gap == doctest::Approx(-2.0));
  CHECK(m1.reliable);
  auto m2 = metrics(12.0, 10.0);
  CHECK(m2.certificate_gap == doctest::Approx(2.0));
  CHECK_FALSE(m2.reliable);
  CHECK(metrics(5.0, 5.0).reliable);
}

TEST_CASE("screen threshold rounds up and survives float noise") {
  CHECK(screen_threshold(0.15, 50) == 43);  // ceil(42.5)
  CHECK(screen_threshold(0.5, 10) == 5);    // exact product stays put
  CHECK(screen_threshold(0.0, 7) == 7);
  CHECK(screen_threshold(0.1, 30) == 27);   // 27.000000000000004 -> 27
  CHECK_THROWS_AS(screen_threshold(1.0, 10), std::invalid_argument);
}

namespace {

TuneSetup newsvendor_setup() {
  TuneSetup setup;
  setup.objective = th::newsvendor1(4.0, 2.0);
  setup.decision = th::decision1(0, 1);
  setup.scheme = partition::single_region(th::box1(0, 1));
  setup.cone = cones::trivial_cone(1);
  return setup;
}

core::SampleSet demand_sample(int n, std::uint64_t seed) {
  rng::Stream stream(rng::substream(seed, {0xD0}));
  core::SampleSet s;
  for (int j = 0; j < n; ++j) s.push_back(th::vec({stream.uniform(0.1, 0.9)}));
  return s;
}

}  // namespace

TEST_CASE("a generous radius passes the screen where the empirical fit "
          "fails") {
  auto sample = demand_sample(8, 11);
  std::vector<TuneCandidate> candidates = {{0.0, 0.0}, {0.8, 0.0}};
  auto result = bootstrap_tune(sample, TuneMethod::drow, newsvendor_setup(),
                               candidates, 0.2, 10, 77);
  const auto& table = result.table;
  CHECK(table[1].screen_count >= table[0].screen_count);
  CHECK(table[1].screen_count >= result.threshold);
  CHECK(result.table[result.selected_candidate].selected);
  CHECK(result.table[result.selected_candidate].screen_count >=
        result.threshold);
}

TEST_CASE("a single passing candidate is selected") {
  auto sample = demand_sample(6, 12);
  std::vector<TuneCandidate> candidates = {{0.9, 0.0}};
  auto result = bootstrap_tune(sample, TuneMethod::drow, newsvendor_setup(),
                               candidates, 0.3, 6, 5);
  CHECK(result.selected_candidate == 0);
  CHECK(result.selected.epsilon == 0.9);
  CHECK(result.decision.size() == 1);
}

TEST_CASE("an unpassable screen raises an error carrying the table") {
  auto sample = demand_sample(10, 13);
  std::vector<TuneCandidate> candidates = {{0.0, 0.0}};
  bool threw = false;
  try {
    bootstrap_tune(sample, TuneMethod::drow, newsvendor_setup(), candidates,
                   0.0, 12, 7);
  } catch (const NoReliableCandidate& e) {
    threw = true;
    REQUIRE(e.table.size() == 1);
    CHECK(e.table[0].screen_count < 12);
  }
  CHECK(threw);
}

TEST_CASE("tuning is reproducible and schedule-independent") {
  auto sample = demand_sample(9, 14);
  std::vector<TuneCandidate> candidates = {{0.05, 0.0}, {0.3, 0.0}, {0.9, 0.0}};
  auto a = bootstrap_tune(sample, TuneMethod::drow, newsvendor_setup(),
                          candidates, 0.2, 8, 3, 1);
  auto b = bootstrap_tune(sample, TuneMethod::drow, newsvendor_setup(),
                          candidates, 0.2, 8, 3, 4);
  CHECK(a.selected_candidate == b.selected_candidate);
  CHECK(a.certificate == b.certificate);
  CHECK(a.decision(0) == b.decision(0));
  REQUIRE(a.table.size() == b.table.size());
  for (size_t c = 0; c < a.table.size(); ++c) {
    CHECK(a.table[c].screen_count == b.table[c].screen_count);
    CHECK(a.table[c].mean_validation == b.table[c].mean_validation);
  }
}

TEST_CASE("partitioned tuning filters radii below the feasible floor") {
  TuneSetup setup;
  setup.objective = th::newsvendor1(4.0, 2.0);
  setup.decision = th::decision1(0, 1);
  setup.scheme = th::interval_cells(0, 1, 2);
  setup.cone = cones::simple_order(2);
  // demand concentrated high: every resample has empirical weights opposing
  // the imposed order, so a near-zero radius can never reach the cone and
  // even a generous one prices a worst case the data exceeds
  core::SampleSet sample;
  rng::Stream stream(rng::substream(21, {0xD1}));
  for (int j = 0; j < 12; ++j)
    sample.push_back(th::vec({stream.uniform(0.6, 0.95)}));
  std::vector<TuneCandidate> candidates = {{0.2, 0.005}, {0.2, 1.2}};
  bool threw = false;
  try {
    bootstrap_tune(sample, TuneMethod::droc, setup, candidates, 0.3, 6, 19);
  } catch (const NoReliableCandidate& e) {
    threw = true;
    REQUIRE(e.table.size() == 2);
    CHECK(e.table[0].filtered);
    CHECK_FALSE(e.table[1].filtered);
    CHECK(e.table[1].screen_count < screen_threshold(0.3, 6));
  }
  CHECK(threw);
}

TEST_CASE("partitioned tuning selects the cheapest covering candidate when "
          "the order matches the data") {
  TuneSetup setup;
  setup.objective = th::newsvendor1(4.0, 2.0);
  setup.decision = th::decision1(0, 1);
  setup.scheme = th::interval_cells(0, 1, 2);
  setup.cone = cones::simple_order(2);
  core::SampleSet sample;
  rng::Stream stream(rng::substream(22, {0xD2}));
  for (int j = 0; j < 14; ++j)
    sample.push_back(th::vec({stream.uniform(0.05, 0.45)}));
  std::vector<TuneCandidate> candidates = {{0.3, 0.4}, {0.6, 0.8}};
  auto result = bootstrap_tune(sample, TuneMethod::droc, setup, candidates,
                               0.3, 6, 23);
  const auto& sel = result.table[result.selected_candidate];
  CHECK_FALSE(sel.filtered);
  CHECK(sel.screen_count >= result.threshold);
  for (const auto& row : result.table)
    if (!row.filtered && row.screen_count >= result.threshold)
      CHECK(sel.mean_validation <= row.mean_validation);
  CHECK(result.decision(0) >= 0.0);
  CHECK(result.decision(0) <= 1.0);
  CHECK(std::isfinite(result.certificate));
}

TEST_CASE("tuning table exports the advertised columns") {
  std::vector<TuneRow> table(2);
  table[0].candidate = 0;
  table[0].epsilon = 0.25;
  table[0].rho = 0.5;
  table[0].screen_count = 7;
  table[0].mean_validation = 1.25;
  table[1].candidate = 1;
  table[1].epsilon = 0.5;
  table[1].rho = 0.125;
  table[1].screen_count = 9;
  table[1].mean_validation = 1.5;
  table[1].selected = true;
  std::string csv = tune_table_csv(table);
  CHECK(csv ==
        "candidate_id,epsilon,rho,screen_count,mean_validation_cost,"
        "selected\n0,0.25,0.5,7,1.25,0\n1,0.5,0.125,9,1.5,1\n");
}
