#include <doctest.h>

#include <random>

#include "dsm/dsm.hpp"
#include "support/fixtures.hpp"

using namespace dsm;
using doctest::Approx;

namespace {

GameState state_with(std::vector<double> g) {
  GameState s;
  s.indices = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
  s.last_selected.assign(g.size(), -1);
  return s;
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("initial state copies the target indices") {
    const ScenarioGame sg = testing::calibrated(30);
    const GameState s = init_state(sg.target);
    CHECK(s.period == 0);
    CHECK_FALSE(s.punished);
    CHECK(s.indices == sg.target.indices);
    CHECK(s.last_selected.size() == 30);
  }

  TEST_CASE("active set takes the largest indices") {
    CHECK(select_active_set(state_with({0.853, 0.147, 0.0}), 1) == std::vector<int>{0});
    CHECK(select_active_set(state_with({0.1, 0.6, 0.3, 1.0}), 2) == std::vector<int>{1, 3});
  }

  TEST_CASE("ties go to the least recently selected, then the lowest id") {
    GameState s = state_with({0.5, 0.5, 0.5, 0.5});
    CHECK(select_active_set(s, 2) == std::vector<int>{0, 1});
    s.last_selected = {3, 1, -1, 2};
    CHECK(select_active_set(s, 1) == std::vector<int>{2});
    CHECK(select_active_set(s, 2) == std::vector<int>{1, 2});
  }

  TEST_CASE("recommendations") {
    const ScenarioGame sg = testing::calibrated(30);
    const Game& game = sg.game;
    GameState s = init_state(sg.target);
    const std::vector<int> one{0};
    Profile r = recommend(s, one, game);
    CHECK(r(0, 18) == Approx(0.55));
    CHECK(r(0, 14) == Approx(0.80));
    CHECK(r.row(1).transpose() == game.population[1].desired);

    std::vector<int> all(30);
    for (int i = 0; i < 30; ++i) all[static_cast<std::size_t>(i)] = i;
    r = recommend(s, all, game);
    for (int i = 0; i < 30; ++i) CHECK(r(i, 18) == Approx(0.55));

    s.punished = true;
    r = recommend(s, one, game);
    CHECK(r == desired_profile(game.population));
  }

  TEST_CASE("settlement and detection") {
    const ScenarioGame sg = testing::calibrated(30);
    const Game& game = sg.game;
    const std::vector<int> one{0};
    const Profile follow = recommend(init_state(sg.target), one, game);
    Settlement s = settle_period(follow, game.pricing, true);
    CHECK(s.aggregate[18] == Approx(28.1));
    CHECK(s.prices.maxCoeff() == 0.1);
    CHECK_FALSE(s.deviated);

    const Profile stay = desired_profile(game.population);
    s = settle_period(stay, game.pricing, true);
    CHECK(s.prices[18] == 0.8);
    CHECK(s.deviated);
    s = settle_period(stay, game.pricing, false);
    CHECK(s.prices[18] == 0.8);
    CHECK_FALSE(s.deviated);
  }

  TEST_CASE("index update") {
    const Eigen::VectorXd bounds = Eigen::VectorXd::Ones(3);
    const std::vector<int> one{0};
    const Eigen::VectorXd g = update_indices(state_with({0.853, 0.147, 0.0}), one, 0.995, bounds, 1);
    CHECK(g[0] == Approx((0.853 - 0.005) / 0.995));
    CHECK(g[1] == Approx(0.147 / 0.995));
    CHECK(g[2] == 0.0);
    CHECK(g.sum() == Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("index update fixed points") {
    const Eigen::VectorXd bounds = Eigen::VectorXd::Ones(3);
    const std::vector<int> first{0};
    const Eigen::VectorXd sat = update_indices(state_with({1.0, 0.0, 0.0}), first, 0.9, bounds, 1);
    CHECK(sat[0] == Approx(1.0));
    CHECK(sat[1] == 0.0);
    const Eigen::VectorXd frozen = update_indices(state_with({0.6, 0.4, 0.0}), first, 0.0, bounds, 1);
    CHECK(frozen[0] == 0.6);
    CHECK(frozen[1] == 0.4);
  }

  TEST_CASE("index update leaving the box is reported") {
    const Eigen::VectorXd bounds = Eigen::VectorXd::Ones(2);
    const std::vector<int> first{0};
    GameState s = state_with({0.5, 0.5});
    s.period = 7;
    try {
      update_indices(s, first, 0.4, bounds, 1);
      FAIL("expected IndexOutOfBounds");
    } catch (const IndexOutOfBounds& e) {
      CHECK(e.period() == 7);
      CHECK(e.consumer() == 0);
      CHECK(e.value() < 0.0);
    }
  }

  TEST_CASE("compliant play keeps exactly m shifters and low prices") {
    const ScenarioGame sg = testing::calibrated(30);
    const auto policies = testing::all_compliant(30);
    const SimulationTrace tr = run(sg.game, sg.target, policies, 5000, 0.995);
    REQUIRE(tr.records.size() == 5000);
    for (const auto& r : tr.records) {
      CHECK(r.active_set.size() == 1);
      CHECK_FALSE(r.deviated);
      CHECK_FALSE(r.punished);
      CHECK(r.prices.maxCoeff() == 0.1);
      CHECK(std::abs(r.indices.sum() - 1.0) <= 1e-7);
    }
    CHECK(tr.final_state.period == 5000);
  }

  TEST_CASE("a single period run") {
    const ScenarioGame sg = testing::calibrated(30);
    const auto policies = testing::all_compliant(30);
    const SimulationTrace tr = run(sg.game, sg.target, policies, 1, 0.995);
    REQUIRE(tr.records.size() == 1);
    CHECK(tr.records[0].active_set == std::vector<int>{0});
    CHECK(tr.records[0].stage_costs[0] == Approx(1.78));
    CHECK(tr.records[0].stage_costs[1] == Approx(1.0));
  }

  TEST_CASE("a detected deviation triggers permanent punishment") {
    const ScenarioGame sg = testing::calibrated(30);
    auto policies = testing::all_compliant(30);
    policies[0] = OneShotDeviator{0, 0};
    const SimulationTrace tr = run(sg.game, sg.target, policies, 50, 0.995, {true, true});
    CHECK(tr.records[0].deviated);
    CHECK(tr.records[0].off_recommendation);
    CHECK(tr.records[0].prices[18] == 0.8);
    const Profile desired = desired_profile(sg.game.population);
    for (std::size_t t = 1; t < tr.records.size(); ++t) {
      const auto& r = tr.records[t];
      CHECK(r.punished);
      CHECK(r.active_set.empty());
      CHECK(r.prices[18] == 0.8);
      CHECK(*r.actions == desired);
      CHECK(r.stage_costs[3] == Approx(1.665));
    }
    CHECK(tr.final_state.punished);
  }

  TEST_CASE("myopic agents fall into the equilibrium and stay") {
    const ScenarioGame sg = testing::calibrated(30);
    const std::vector<AgentPolicy> policies(30, MyopicBestResponse{});
    const SimulationTrace tr = run(sg.game, sg.target, policies, 20, 0.995, {true, true});
    CHECK(tr.records[0].deviated);
    const Profile desired = desired_profile(sg.game.population);
    for (const auto& r : tr.records) CHECK(*r.actions == desired);
  }

  TEST_CASE("target costs decompose into stage cost and continuation") {
    const ScenarioGame sg = testing::calibrated(30);
    const double delta = 0.995;
    const auto policies = testing::all_compliant(30);
    const SimulationTrace tr = run(sg.game, sg.target, policies, 500, delta);
    const auto value = [&](const Eigen::VectorXd& g) { return index_to_cost(g, sg.game.extremes); };
    for (std::size_t t = 0; t + 1 < tr.records.size(); ++t) {
      const Eigen::VectorXd now = value(tr.records[t].indices);
      const Eigen::VectorXd next = value(tr.records[t + 1].indices);
      const Eigen::VectorXd rhs = (1.0 - delta) * tr.records[t].stage_costs + delta * next;
      CHECK((now - rhs).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  TEST_CASE("discounted costs") {
    const ScenarioGame sg = testing::calibrated(30);
    const auto policies = testing::all_compliant(30);
    const SimulationTrace tr = run(sg.game, sg.target, policies, 5000, 0.995);
    for (int i : {0, 1, 2, 29}) {
      const DiscountedValue v = discounted_cost(tr, i, 0.995);
      CHECK(std::abs(v.cost - sg.target.costs[i]) <= v.tail + 1e-9);
    }
    CHECK(discounted_cost(tr, 0, 0.995).cost == Approx(1.0 + 0.852564 * 0.78).epsilon(1e-5));

    const SimulationTrace flat = run(sg.game, sg.target, policies, 10, 0.0);
    CHECK(discounted_cost(flat, 0, 0.0).cost == Approx(1.78));
    CHECK(discounted_cost(flat, 1, 0.0).cost == Approx(1.0));
  }

  TEST_CASE("candidate family") {
    const Game game = testing::calibrated(30).game;
    const auto c = candidate_actions(game, 0);
    CHECK(c.size() == 2 + 23 * 4);
    CHECK(c[0] == game.population[0].desired);
    for (const auto& a : c) CHECK(a.sum() == Approx(10.0));
  }

  TEST_CASE("best-response dynamics settle on the desired profile in one round") {
    const Game game = testing::calibrated(30).game;
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
      Profile p = desired_profile(game.population);
      for (int i = 0; i < 30; ++i) {
        const auto c = candidate_actions(game, i);
        p.row(i) = c[std::uniform_int_distribution<std::size_t>(0, c.size() - 1)(rng)].transpose();
      }
      const int rounds = best_response_dynamics(game, p, 10);
      CHECK(rounds >= 0);
      CHECK(rounds <= 1);
      CHECK((p - desired_profile(game.population)).cwiseAbs().maxCoeff() <= kPatternTolerance);
    }
  }

  TEST_CASE("audit of the calibrated game passes with a binding consumer") {
    const ScenarioGame sg = testing::calibrated(30);
    const IcReport r = audit_ic(sg.game, sg.target, 0.995);
    CHECK(r.ok);
    CHECK(r.min_gap >= -1e-7);
    CHECK(r.max_simulation_error <= r.tail_bound + 1e-9);
    bool saw_binding = false, saw_slack = false;
    for (const auto& e : r.entries) {
      if (e.period != -1) continue;
      if (e.consumer == 0) saw_binding = std::abs(e.gap) < 1e-9;
      if (e.consumer == 5) saw_slack = e.gap == Approx(0.665);
    }
    CHECK(saw_binding);
    CHECK(saw_slack);
  }

  TEST_CASE("slack in the threshold lets an active consumer shirk undetected") {
    // m = 8 shifters of 0.38 kWh clear 3.04 kWh where 2.85 kWh is enough.
    const ScenarioGame sg = build(testing::par_goal_document(30, 0.1));
    CHECK(sg.game.shifters() == 8);
    AuditOptions opts;
    opts.window = 20;
    CHECK_THROWS_AS(audit_ic(sg.game, sg.target, 0.995, opts), NotIC);
    const IcReport r = audit_ic_report(sg.game, sg.target, 0.995, opts);
    CHECK_FALSE(r.ok);
    CHECK(r.min_gap < -1e-7);
  }
}
