#include <doctest.h>

#include <cstring>

#include "dro/oracle.hpp"
#include "dro/partition.hpp"
#include "dro/reformulate.hpp"
#include "dro/rng.hpp"
#include "helpers.hpp"

using namespace dro;
using reformulate::SolveStatus;

namespace {

double solved_value(reformulate::BuiltProgram& built) {
  auto sol = reformulate::solve(built.program);
  REQUIRE(sol.status == SolveStatus::optimal);
  return sol.objective;
}

core::PiecewiseObjective identity_objective() {
  core::PiecewiseObjective f;
  f.pieces.push_back(th::piece1(0.0, 1.0, 0.0, 0.0));
  return f;
}

}  // namespace

TEST_CASE("box support function picks the best corner per coordinate") {
  auto box = th::box2(-1, 2, -1, 2);
  CHECK(reformulate::support_function_box(box, th::vec({1.0, -3.0})) ==
        doctest::Approx(5.0));
  CHECK(reformulate::support_function_box(box, th::vec({0.0, 0.0})) == 0.0);

  core::Box half;
  half.lower = th::vec({0.0});
  half.upper = core::Vector::Constant(
      1, std::numeric_limits<double>::infinity());
  CHECK(reformulate::support_function_box(half, th::vec({0.0})) == 0.0);
  CHECK_THROWS_AS(reformulate::support_function_box(half, th::vec({1.0})),
                  std::invalid_argument);
}

TEST_CASE("negated-piece conjugate is finite only at the matching slope") {
  auto piece = th::piece1(2.0, -1.0, 3.0, 0.5);  // slope(x) = 2x - 1
  core::Vector x = th::vec({1.0});               // slope = 1, intercept = 3.5
  auto hit = reformulate::neg_conjugate_affine(piece, x, th::vec({-1.0}));
  REQUIRE(hit.has_value());
  CHECK(*hit == doctest::Approx(3.5));
  CHECK_FALSE(
      reformulate::neg_conjugate_affine(piece, x, th::vec({-0.9})).has_value());
}

TEST_CASE("smallest feasible radius") {
  SUBCASE("reordering two masses costs twice the gap to the midpoint") {
    CHECK(reformulate::min_radius_feasible(cones::simple_order(2),
                                           th::vec({0.2, 0.8})) ==
          doctest::Approx(0.6).epsilon(1e-7));
  }
  SUBCASE("a conforming prior costs nothing") {
    CHECK(reformulate::min_radius_feasible(cones::simple_order(2),
                                           th::vec({0.7, 0.3})) ==
          doctest::Approx(0.0).epsilon(1e-7));
    CHECK(reformulate::min_radius_feasible(cones::trivial_cone(3),
                                           th::vec({0.1, 0.4, 0.5})) ==
          doctest::Approx(0.0).epsilon(1e-7));
  }
  SUBCASE("a cone that excludes the simplex is reported") {
    cones::OrderCone hostile;
    hostile.kind = cones::Kind::custom;
    hostile.matrix = core::Matrix::Constant(1, 2, -1.0);  // -p1 - p2 >= 0
    CHECK_THROWS_AS(
        reformulate::min_radius_feasible(hostile, th::vec({0.5, 0.5})),
        reformulate::InfeasiblePrior);
  }
}

TEST_CASE("empirical program recovers the critical-fractile order point") {
  auto samples = th::samples1({0.1, 0.2, 0.4, 0.7, 0.9});
  auto built = reformulate::reduce_saa(samples, th::newsvendor1(4, 2),
                                       th::decision1(0, 1));
  auto sol = reformulate::solve(built.program);
  REQUIRE(sol.status == SolveStatus::optimal);
  // fractile 2/(2+4) = 1/3 of five points: the second order statistic
  CHECK(built.decision_of(sol)(0) == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(sol.objective == doctest::Approx(0.64).epsilon(1e-7));
}

TEST_CASE("empirical program minimizes the quadratic market objective") {
  auto samples = th::samples1({0.5, 1.5});
  auto built = reformulate::reduce_saa(samples, th::quadratic_single(),
                                       th::decision1(0, 1));
  auto sol = reformulate::solve(built.program);
  REQUIRE(sol.status == SolveStatus::optimal);
  // min x^2 - x*mean with mean 1 -> x = 1/2, value -1/4
  CHECK(built.decision_of(sol)(0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(sol.objective == doctest::Approx(-0.25).epsilon(1e-7));
}

TEST_CASE("single-region collapse: the partitioned program, the plain "
          "transport ball and the empirical program agree") {
  rng::Stream stream(rng::substream(31, {0x1F}));
  for (int trial = 0; trial < 5; ++trial) {
    int n = 2 + (int)stream.uniform_int(0, 4);
    core::SampleSet samples;
    for (int j = 0; j < n; ++j)
      samples.push_back(core::Vector::Constant(1, stream.uniform()));
    double eps = stream.uniform(0.0, 0.6);

    auto support = th::box1(0, 1);
    auto scheme = partition::single_region(support);
    auto inst = th::make_instance(th::decision1(0, 1), th::newsvendor1(4, 2),
                                  scheme, samples, eps, 0.0,
                                  cones::trivial_cone(1));

    auto full = reformulate::build_program(inst);
    auto ball = reformulate::reduce_drow(samples, inst.objective,
                                         inst.decision, eps, support);
    double v_full = solved_value(full);
    double v_ball = solved_value(ball);
    CHECK(std::abs(v_full - v_ball) <= 1e-8);

    inst.ambiguity.epsilon = 0.0;
    auto degenerate = reformulate::build_program(inst);
    auto saa = reformulate::reduce_saa(samples, inst.objective, inst.decision);
    auto ball0 = reformulate::reduce_drow(samples, inst.objective,
                                          inst.decision, 0.0, support);
    double v_saa = solved_value(saa);
    CHECK(std::abs(solved_value(degenerate) - v_saa) <= 1e-8);
    CHECK(std::abs(solved_value(ball0) - v_saa) <= 1e-8);
  }
}

TEST_CASE("dual value matches the brute-force worst case (pinned decision)") {
  rng::Stream stream(rng::substream(777, {0x2A}));
  for (int trial = 0; trial < 20; ++trial) {
    CAPTURE(trial);
    auto fixed = th::random_fixed_instance(stream, 1 + trial % 2, true);
    auto built = reformulate::build_program(fixed.instance);
    auto sol = reformulate::solve(built.program);
    REQUIRE(sol.status == SolveStatus::optimal);
    auto wc = oracle::worst_case_expectation(
        fixed.x, oracle::finite_relaxation(fixed.instance));
    CHECK(std::abs(sol.objective - wc.value) <= 1e-6);
  }
}

TEST_CASE("an unreachable weight set shows up as dual unboundedness and "
          "oracle infeasibility together") {
  rng::Stream stream(rng::substream(778, {0x2B}));
  int exercised = 0;
  for (int trial = 0; trial < 30 && exercised < 6; ++trial) {
    auto fixed = th::random_fixed_instance(stream, 1, false);
    if (fixed.instance.ambiguity.rho >= fixed.rho_min) continue;  // feasible
    ++exercised;
    CAPTURE(trial);
    auto built = reformulate::build_program(fixed.instance);
    auto sol = reformulate::solve(built.program);
    CHECK(sol.status == SolveStatus::unbounded);
    CHECK_THROWS_AS(oracle::worst_case_expectation(
                        fixed.x, oracle::finite_relaxation(fixed.instance)),
                    oracle::InfeasibleAmbiguity);
  }
  CHECK(exercised > 0);
}

TEST_CASE("optimal value is monotone in the budgets") {
  rng::Stream stream(rng::substream(779, {0x2C}));
  for (int trial = 0; trial < 5; ++trial) {
    auto fixed = th::random_fixed_instance(stream, 1, true);
    auto inst = fixed.instance;
    inst.decision = th::decision1(-1, 1);  // free the decision

    auto base = reformulate::build_program(inst);
    double v0 = solved_value(base);

    auto wider = inst;
    wider.ambiguity.epsilon += 0.3;
    auto b1 = reformulate::build_program(wider);
    CHECK(solved_value(b1) >= v0 - 1e-8);

    auto rounder = inst;
    rounder.ambiguity.rho += 0.3;
    auto b2 = reformulate::build_program(rounder);
    CHECK(solved_value(b2) >= v0 - 1e-8);
  }
}

TEST_CASE("adding cone rows never increases the value") {
  // samples chosen so the empirical weights already satisfy the orders
  auto scheme = th::interval_cells(0, 1, 3);
  auto samples = th::samples1({0.05, 0.1, 0.2, 0.3, 0.4, 0.55, 0.6, 0.9});
  // counts (5, 2, 1): simple-order feasible with rho_min = 0
  auto base = th::make_instance(th::decision1(0, 1), th::newsvendor1(4, 2),
                                scheme, samples, 0.2, 0.3,
                                cones::trivial_cone(3));
  auto trivial = reformulate::build_program(base);
  double v_trivial = solved_value(trivial);

  auto ordered = base;
  ordered.ambiguity.cone = cones::simple_order(3);
  auto simple = reformulate::build_program(ordered);
  double v_simple = solved_value(simple);
  CHECK(v_simple <= v_trivial + 1e-8);

  // one more row on top of the simple order
  cones::OrderCone tighter;
  tighter.kind = cones::Kind::custom;
  tighter.matrix = core::Matrix::Zero(3, 3);
  tighter.matrix.topRows(2) = ordered.ambiguity.cone.matrix;
  tighter.matrix(2, 0) = 1.0;  // p1 >= 3 p3
  tighter.matrix(2, 2) = -3.0;
  auto stacked = base;
  stacked.ambiguity.cone = tighter;
  auto tight = reformulate::build_program(stacked);
  CHECK(solved_value(tight) <= v_simple + 1e-8);
}

TEST_CASE("separable and joint forms agree on one-dimensional support") {
  rng::Stream stream(rng::substream(780, {0x2D}));
  for (int trial = 0; trial < 5; ++trial) {
    auto fixed = th::random_fixed_instance(stream, 1, true);
    auto sep = fixed.instance;
    sep.objective.blocks.push_back(sep.objective.pieces);
    sep.objective.pieces.clear();
    // slopes in joint form map x to a 1-vector; blocks expect the same
    auto a = reformulate::build_program(fixed.instance);
    auto b = reformulate::build_program_separable(sep);
    CHECK(std::abs(solved_value(a) - solved_value(b)) <= 1e-8);
  }
}

TEST_CASE("separable dual matches the brute-force worst case in 2-d") {
  rng::Stream stream(rng::substream(781, {0x2E}));
  for (int trial = 0; trial < 8; ++trial) {
    CAPTURE(trial);
    auto fixed = th::random_fixed_instance(stream, 2, true);
    // rebuild the objective as two independent coordinate blocks
    core::PiecewiseObjective sep;
    sep.blocks.resize(2);
    for (int l = 0; l < 2; ++l) {
      int pieces = 1 + (int)stream.uniform_int(0, 1);
      for (int k = 0; k < pieces; ++k)
        sep.blocks[l].push_back(th::piece1(stream.uniform(-1, 1),
                                           stream.uniform(-1.5, 1.5),
                                           stream.uniform(-1, 1),
                                           stream.uniform(-1, 1)));
    }
    auto inst = fixed.instance;
    inst.objective = sep;

    auto built = reformulate::build_program_separable(inst);
    auto sol = reformulate::solve(built.program);
    REQUIRE(sol.status == SolveStatus::optimal);
    auto wc = oracle::worst_case_expectation(
        fixed.x, oracle::finite_relaxation(inst));
    CHECK(std::abs(sol.objective - wc.value) <= 1e-6);
  }
}

TEST_CASE("form mismatches are rejected") {
  auto scheme = th::interval_cells(0, 1, 1);
  auto inst = th::make_instance(th::decision1(0, 1), th::newsvendor1(4, 2),
                                scheme, th::samples1({0.4}), 0.1, 0.0,
                                cones::trivial_cone(1));
  CHECK_THROWS_AS(reformulate::build_program_separable(inst),
                  std::invalid_argument);
  auto sep = inst;
  sep.objective.blocks.push_back(sep.objective.pieces);
  sep.objective.pieces.clear();
  CHECK_THROWS_AS(reformulate::build_program(sep), std::invalid_argument);
}

TEST_CASE("quadratic intercepts ride through one shared epigraph") {
  auto scheme = th::interval_cells(0, 2.5, 2);
  auto samples = th::samples1({0.3, 1.2, 2.0});
  auto inst = th::make_instance(th::decision1(0, 1), th::quadratic_single(),
                                scheme, samples, 0.3, 0.2,
                                cones::simple_order(2));
  // pinned decision: compare against the oracle
  inst.decision = th::decision1(0.4, 0.4);
  auto built = reformulate::build_program(inst);
  auto sol = reformulate::solve(built.program);
  REQUIRE(sol.status == SolveStatus::optimal);
  auto wc = oracle::worst_case_expectation(
      th::vec({0.4}), oracle::finite_relaxation(inst));
  CHECK(std::abs(sol.objective - wc.value) <= 1e-6);
}

TEST_CASE("empty regions price at their supremum") {
  auto scheme = th::interval_cells(0, 1, 2);
  auto inst = th::make_instance(th::decision1(0, 0), identity_objective(),
                                scheme, th::samples1({0.1, 0.3}), 0.0, 0.0,
                                cones::trivial_cone(2));
  auto built = reformulate::build_program(inst);
  auto sol = reformulate::solve(built.program);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.objective ==
        doctest::Approx(2.0 / 3 * 0.2 + 1.0 / 3 * 1.0).epsilon(1e-7));
}

TEST_CASE("repeat solves are bit-identical") {
  auto scheme = th::interval_cells(0, 1, 2);
  auto inst = th::make_instance(th::decision1(0, 1), th::newsvendor1(4, 2),
                                scheme, th::samples1({0.2, 0.5, 0.8}), 0.15,
                                0.25, cones::simple_order(2));
  auto b1 = reformulate::build_program(inst);
  auto b2 = reformulate::build_program(inst);
  auto s1 = reformulate::solve(b1.program);
  auto s2 = reformulate::solve(b2.program);
  REQUIRE(s1.status == SolveStatus::optimal);
  CHECK(std::memcmp(&s1.objective, &s2.objective, sizeof(double)) == 0);
  for (size_t i = 0; i < s1.values.size(); ++i)
    CHECK(std::memcmp(&s1.values[i], &s2.values[i], sizeof(double)) == 0);
}

TEST_CASE("decision pinning helper") {
  auto scheme = th::interval_cells(0, 1, 1);
  auto inst = th::make_instance(th::decision1(0, 1), th::newsvendor1(4, 2),
                                scheme, th::samples1({0.5}), 0.0, 0.0,
                                cones::trivial_cone(1));
  auto built = reformulate::build_program(inst);
  built.fix_decision(th::vec({0.25}));
  auto sol = reformulate::solve(built.program);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(built.decision_of(sol)(0) == doctest::Approx(0.25));
  // cost at x = 0.25 with atom 0.5: backlog 2 * 0.25
  CHECK(sol.objective == doctest::Approx(0.5).epsilon(1e-7));
  CHECK_THROWS_AS(built.fix_decision(th::vec({0.1, 0.2})),
                  std::invalid_argument);
}
