#include <doctest.h>

#include <random>

#include "dsm/dsm.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace dsm;
using doctest::Approx;

TEST_SUITE("baselines") {
  TEST_CASE("peak-to-average ratio") {
    CHECK(par(Pattern::Constant(24, 3.0)) == Approx(1.0));
    const Game game = testing::calibrated(30).game;
    const Profile desired = desired_profile(game.population);
    CHECK(par(desired) == Approx(2.28));
    Pattern load = aggregate_load(desired);
    CHECK(par(load) == Approx(2.28));
    load[18] -= 2.85;
    load[14] += 2.85;
    CHECK(par(load) == Approx(2.052));
  }

  TEST_CASE("stage equilibrium baseline") {
    CHECK(og_dsm(testing::calibrated(30).game).total_cost == Approx(49.95));
    const BaselineResult r = og_dsm(testing::calibrated(100).game);
    CHECK(r.total_cost == Approx(166.50));
    CHECK(r.par == Approx(2.28));
    CHECK(r.name == "OG-DSM");
  }

  TEST_CASE("social optimum of the calibrated game") {
    const BaselineResult r = jo_dsm(testing::calibrated(30).game);
    CHECK(r.total_cost == Approx(30.78));
    CHECK(r.stage_costs[0] == Approx(1.78));
    CHECK(r.par < og_dsm(testing::calibrated(30).game).par);
  }

  TEST_CASE("social optimum picks the cheaper shifter") {
    // Two consumers; the second has the smaller fixed discomfort.
    Population pop{testing::make_consumer(0, {0.5, 1.0}, {0.5, 0.5}, {0.1, 0.1}, 0.9, 5.0),
                   testing::make_consumer(1, {0.5, 1.0}, {0.5, 0.5}, {0.1, 0.1}, 0.5, 5.0)};
    const Game game = make_game(pop, make_pricing(pop, 0.1, 1.8, 1.6));
    const BaselineResult r = jo_dsm(game);
    CHECK(r.profiles(1, 1) == Approx(0.5));
    CHECK(r.profiles(0, 1) == Approx(1.0));
    CHECK(r.total_cost == Approx(0.1 * 3.0 + 0.5 + 0.1 * 0.5 * 2));
  }

  TEST_CASE("social optimum prefers nobody shifting when shifting costs more") {
    Population pop{testing::make_consumer(0, {0.5, 1.0}, {0.5, 0.5}, {0.1, 0.1}, 5.0, 9.0),
                   testing::make_consumer(1, {0.5, 1.0}, {0.5, 0.5}, {0.1, 0.1}, 5.0, 9.0)};
    const Game game = make_game(pop, make_pricing(pop, 0.1, 0.8, 1.6));
    const BaselineResult r = jo_dsm(game);
    CHECK(r.total_cost == Approx(og_dsm(game).total_cost));
  }

  TEST_CASE("social optimum matches exhaustive search") {
    for (int m : {1, 2}) {
      const oracle::Instance g = oracle::three_by_three(m);
      const Game game = testing::game_from(g);
      CHECK(jo_dsm(game).total_cost == Approx(oracle::social_minimum(g, 0.1)).epsilon(1e-12));
    }
  }

  TEST_CASE("self-consumption baseline") {
    const Game game = testing::calibrated(30).game;
    const BaselineResult r = sc_dsm(game, 0.8);
    // High price still applies to the 0.55 kWh left at the peak.
    CHECK(r.stage_costs[0] == Approx(0.1 * 9.45 + 0.8 * 0.55 + 0.2 * 0.78));
    CHECK(r.profiles(0, 18) == Approx(0.55));
    const BaselineResult none = sc_dsm(game, 0.0);
    CHECK(none.stage_costs[0] == Approx(1.665));
    CHECK(none.profiles(0, 18) == Approx(0.95));
    CHECK(sc_dsm(game, 1.0).stage_costs[0] == Approx(0.1 * 9.45 + 0.8 * 0.55));
  }

  TEST_CASE("billing minimization baseline") {
    const ScenarioGame sg = build(testing::par_goal_document(30, 0.1));
    const BaselineResult r = billing_min(sg.game);
    CHECK(r.profiles(0, 18) == Approx(0.95 - 0.095));
    CHECK(r.stage_costs[0] == Approx(1.0 + 0.719));
    CHECK(r.total_cost == Approx(51.57));
    CHECK(r.par == Approx(2.052));
    double discomforts = 0.0, base = 0.0;
    for (int i = 0; i < sg.game.size(); ++i) {
      discomforts += discomfort(r.profiles.row(i), sg.game.population[static_cast<std::size_t>(i)]);
      base += 0.1 * sg.game.population[static_cast<std::size_t>(i)].total_demand;
    }
    CHECK(r.total_cost - discomforts == Approx(base));
  }

  TEST_CASE("billing minimization with one consumer takes the whole reduction") {
    Population pop{testing::make_consumer(0, {0.2, 0.3, 1.0}, {0.0, 0.0, 0.4}, {0.1, 0.2, 0.1}, 0.5, 5.0)};
    const Game game = make_game(pop, make_pricing(pop, 0.1, 0.8, 0.8));
    const BaselineResult r = billing_min(game);
    CHECK(r.profiles(0, 2) == Approx(0.8));
    CHECK(r.profiles(0, 0) == Approx(0.4));
    CHECK(r.profiles(0, 1) == Approx(0.3));
  }

  TEST_CASE("billing minimization needs enough shiftable load") {
    // Equal share 0.3 exceeds the second consumer's 0.2 kWh.
    Population pop{testing::make_consumer(0, {0.1, 1.0}, {0.0, 0.2}, {0.1, 0.1}, 0.5, 5.0),
                   testing::make_consumer(1, {0.1, 1.0}, {0.0, 0.2}, {0.1, 0.1}, 0.5, 5.0)};
    const Game game = make_game(pop, make_pricing(pop, 0.1, 0.8, 1.4));
    pop[1].nonshiftable[1] = 0.8;
    Game uneven = game;
    uneven.population = pop;
    CHECK_THROWS_AS(billing_min(uneven), InsufficientShiftable);
    CHECK_NOTHROW(billing_min(game));
  }

  TEST_CASE("social optimum never costs more than the equilibrium") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
      const testing::RandomScenario s = testing::random_scenario(rng);
      CHECK(jo_dsm(s.game).total_cost <= og_dsm(s.game).total_cost + 1e-12);
    }
  }
}
