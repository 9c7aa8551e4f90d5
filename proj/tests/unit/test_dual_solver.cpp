#include <doctest.h>

#include "oracles.hpp"
#include "small_measures.hpp"
#include "vecot/counterexample.hpp"
#include "vecot/dual_solver.hpp"
#include "vecot/error.hpp"

#include <algorithm>
#include <cmath>

using namespace vecot;
using namespace vecot::testing;

TEST_CASE("already optimal start converges without iterating") {
  Rng rng(3);
  const LayeredMeasure m = random_measure(12, 2, 2, rng);
  const CostField c = random_costs(3, 12, rng);
  const Matrix p0 = mat(3, 2, {1.2, 0.3, 0.2, 1.1, 0.9, 0.8});
  SolverConfig cfg;
  cfg.initial_prices = p0;
  const DualReport r = solve_dual(m, c, induced_demand(m, c, p0), cfg);
  CHECK(r.status == SolveStatus::Converged);
  CHECK(r.iterations == 0);
  CHECK(r.residual <= 1e-12);
  CHECK(r.prices == p0);
}

TEST_CASE("scalar instance converges to the transport optimum") {
  Rng rng(17);
  const LayeredMeasure m = random_measure(100, 1, 1, rng, 0.0, 1.0);
  const CostField c = random_costs(4, 100, rng);
  const DemandMatrix target = sample_achievable(m, 4, 17).demand;
  const DualReport r = solve_scalar(m, c, target.col(0));
  REQUIRE(r.status == SolveStatus::Converged);
  const std::optional<double> lp = transport_optimum(m, c, target);
  REQUIRE(lp);
  CHECK(std::abs(r.best_objective - *lp) <= 1e-6);
  CHECK(r.residual <= 1e-6);
  CHECK(is_equilibrium(m, c, r.prices, target, 1e-6, true, TieCompletion::Fractional));
}

TEST_CASE("single agent saturating the market") {
  Rng rng(5);
  const LayeredMeasure m = random_measure(15, 1, 1, rng);
  const CostField c = random_costs(1, 15, rng);
  const DualReport r = solve_scalar(m, c, total_mass(m));
  REQUIRE(r.status == SolveStatus::Converged);
  CHECK(r.prices(0, 0) >= c.values().maxCoeff() - 1e-9);
  // every point is wholly sold to agent 1 in the certifying completion
  CHECK((r.completion.col(1).array() >= 1.0 - 1e-9).all());
}

TEST_CASE("zero target") {
  Rng rng(6);
  const LayeredMeasure m = random_measure(10, 2, 2, rng);
  const CostField c = random_costs(2, 10, rng);
  const DualReport r = solve_dual(m, c, DemandMatrix::Zero(2, 2));
  REQUIRE(r.status == SolveStatus::Converged);
  CHECK((net_income(m, c, r.prices).array() <= 1e-9).all());
}

TEST_CASE("status paths on the witness") {
  const WitnessInstance wit = build_witness();
  SUBCASE("iteration cap") {
    SolverConfig cfg;
    cfg.max_iterations = 200;
    const DualReport r = solve_dual(wit.measure, wit.cost, wit.target, cfg);
    CHECK(r.status == SolveStatus::IterationCap);
    CHECK(r.iterations == 200);
  }
  SUBCASE("low divergence threshold") {
    SolverConfig cfg;
    cfg.divergence_threshold = 2.0;
    const DualReport r = solve_dual(wit.measure, wit.cost, wit.target, cfg);
    CHECK(r.status == SolveStatus::Diverged);
    CHECK(r.price_norm > 2.0);
    CHECK(r.residual_floor >= 10.0 * cfg.tolerance);
  }
}

TEST_CASE("infeasible targets are rejected before iterating") {
  try {
    solve_dual(half_pair(), CostField::zero(2, 2), mat(2, 1, {0.8, 0.8}));
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleDemand);
  }
}

TEST_CASE("configuration checks") {
  SolverConfig cfg;
  cfg.tolerance = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK_THROWS_AS(solve_scalar(three_point(), CostField::zero(1, 3), Vector::Ones(1)), Error);
}

TEST_CASE("property: history, best objective and certification") {
  Rng rng(61);
  for (int trial = 0; trial < 8; ++trial) {
    const LayeredMeasure m = random_measure(20, 2, 2, rng);
    const CostField c = random_costs(2, 20, rng);
    const DemandMatrix target = sample_achievable(m, 2, 600 + trial).demand;
    SolverConfig cfg;
    cfg.step_rule = trial % 2 ? StepRule::Polyak : StepRule::Diminishing;
    cfg.max_iterations = 3000;
    const DualReport r = solve_dual(m, c, target, cfg);
    double running = -1e300;
    for (const HistoryRow& h : r.history) running = std::max(running, h.objective);
    if (!r.history.empty()) CHECK(r.best_objective >= running - 1e-12);
    // weak duality bounds every iterate
    const std::optional<double> lp = transport_optimum(m, c, target);
    REQUIRE(lp);
    CHECK(r.best_objective <= *lp + 1e-9);
    if (r.status == SolveStatus::Converged) {
      CHECK(r.residual <= cfg.tolerance);
      CHECK(is_equilibrium(m, c, r.prices, target, cfg.tolerance, true,
                           TieCompletion::Fractional));
    }
  }
}

TEST_CASE("property: seeded runs are reproducible") {
  Rng rng(62);
  const LayeredMeasure m = random_measure(15, 2, 2, rng);
  const CostField c = random_costs(2, 15, rng);
  const DemandMatrix target = sample_achievable(m, 2, 1).demand;
  SolverConfig cfg;
  cfg.seed = 99;
  cfg.max_iterations = 500;
  const DualReport a = solve_dual(m, c, target, cfg), b = solve_dual(m, c, target, cfg);
  CHECK(a.prices == b.prices);
  CHECK(a.iterations == b.iterations);
  CHECK(a.history.size() == b.history.size());
}

TEST_CASE("stable partition") {
  SUBCASE("zero cost") {
    const LayeredMeasure m = three_point();
    const DemandMatrix d = demand_of(m, Assignment{1, 2, 0}, 2);
    const StablePartition s = stable_partition(m, CostField::zero(2, 3), d);
    CHECK(s.cost == doctest::Approx(0.0));
    CHECK(demand_of(m, s.labels, 2).isApprox(d));
  }
  SUBCASE("scalar uniqueness regime") {
    // Targets induced by generic prices: the cost-minimizing plan is the
    // price-induced labelling, it is integral, and it is the only labelling
    // meeting the target.
    Rng rng(63);
    for (int trial = 0; trial < 10; ++trial) {
      const LayeredMeasure m = random_measure(7, 1, 1, rng);
      const CostField c = random_costs(2, 7, rng);
      const Matrix p = mat(2, 1, {uniform(rng, 0.5, 1.5), uniform(rng, 0.5, 1.5)});
      const Assignment induced = assign_by_price(m, c, p);
      const DemandMatrix d = demand_of(m, induced, 2);
      const StablePartition s = stable_partition(m, c, d);
      CHECK(s.labels == induced);
      CHECK(s.cost == doctest::Approx(monge_cost(m, c, induced)));
      CHECK(s.cost == doctest::Approx(*transport_optimum(m, c, d)).epsilon(1e-9));
      CHECK(brute_force(m, d).count == 1);
    }
  }
  SUBCASE("witness has no integral price-supported optimum") {
    const WitnessInstance wit = build_witness();
    const RelaxedTransport rt = relaxed_transport(wit.measure, wit.cost, wit.target);
    try {
      const StablePartition s = stable_partition(wit.measure, wit.cost, wit.target);
      CHECK(s.cost == doctest::Approx(rt.value));
    } catch (const FractionalOnlyError& e) {
      CHECK(e.code() == ErrorCode::FractionalOnly);
      CHECK(e.value() == doctest::Approx(rt.value));
    }
    SolverConfig cfg;
    cfg.max_iterations = 5000;
    const DualReport r = solve_dual(wit.measure, wit.cost, wit.target, cfg);
    CHECK(r.best_objective <= rt.value + 1e-9);
  }
}
