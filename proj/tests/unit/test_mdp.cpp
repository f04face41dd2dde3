#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "tandem/ctmc.hpp"
#include "tandem/error.hpp"
#include "tandem/mdp.hpp"
#include "tandem/static_pricing.hpp"

using namespace tandem;

namespace {

std::vector<double> grid_350_750() {
  std::vector<double> p;
  for (int a = 350; a <= 750; a += 50) p.push_back(a);
  return p;
}

// Best gain over every deterministic stationary policy, each solved by the CTMC core.
double brute_force_gain(const SystemConfig& cfg, const MarketModel& market) {
  const StateSpace space(cfg.buffers());
  const std::size_t n = space.size();
  const std::size_t k = market.price_count();
  std::vector<std::size_t> table(n, 0);
  double best = -1.0;
  while (true) {
    const auto policy = PricingPolicy::from_indices(table, k);
    best = std::max(best, solve_steady_state(space, policy, market, cfg).gain);
    std::size_t i = 0;
    while (i < n && ++table[i] == k) table[i++] = 0;
    if (i == n) break;
  }
  return best;
}

}  // namespace

TEST_SUITE("mdp") {
  TEST_CASE("uniformization constant and row structure") {
    const SystemConfig cfg({8, 8}, {1, 1});
    const MarketModel market(3.6, ReservationDistribution::exponential(0.002), grid_350_750());
    const StateSpace space(cfg.buffers());
    const UniformizedMDP mdp = uniformize(space, market, cfg);
    CHECK(mdp.uniformization_rate() == doctest::Approx(19.6));
    for (std::size_t s = 0; s < mdp.states(); ++s) {
      for (std::size_t a = 0; a < mdp.actions(); ++a) {
        double total = 0.0;
        for (const auto& e : mdp.row(s, a)) {
          CHECK(e.probability >= 0.0);
          total += e.probability;
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
        const bool room = space.occupancy(s, 0) <= cfg.buffer(0);
        const double expected =
            room ? market.price(a) * market.potential_rate_at(a) / mdp.uniformization_rate() : 0.0;
        CHECK(mdp.reward(s, a) == doctest::Approx(expected).epsilon(1e-15));
      }
    }
  }

  TEST_CASE("self-loop of the full M/M/1/1 state") {
    const SystemConfig cfg({8}, {0});
    const MarketModel market(3.6, ReservationDistribution::exponential(0.002), {350, 500});
    const StateSpace space(cfg.buffers());
    const UniformizedMDP mdp = uniformize(space, market, cfg);
    for (std::size_t a = 0; a < 2; ++a) {
      double self = 0.0;
      for (const auto& e : mdp.row(1, a)) {
        if (e.target == 1) self += e.probability;
      }
      CHECK(self == doctest::Approx(1.0 - 8.0 / 11.6));
    }
  }

  TEST_CASE("evaluation of static policies matches the CTMC gain") {
    const MarketModel market(3.6, ReservationDistribution::normal(500, 50), grid_350_750());
    for (const auto& cfg : {SystemConfig({8}, {0}), SystemConfig({8, 8}, {3, 0}),
                            SystemConfig({8, 5, 7}, {1, 1, 0})}) {
      const StateSpace space(cfg.buffers());
      const UniformizedMDP mdp = uniformize(space, market, cfg);
      for (std::size_t a = 0; a < market.price_count(); ++a) {
        const auto policy = PricingPolicy::constant(space.size(), a);
        const PolicyEvaluation ev = policy_evaluation(mdp, policy);
        CHECK(ev.gain ==
              doctest::Approx(solve_steady_state(space, policy, market, cfg).gain).epsilon(1e-9));
        CHECK(ev.bias(0) == 0.0);
      }
    }
  }

  TEST_CASE("birth-death evaluation") {
    const MarketModel market(3.6, ReservationDistribution::exponential(0.002), {500});
    const SystemConfig cfg({8}, {0});
    const StateSpace space(cfg.buffers());
    const PolicyEvaluation ev =
        policy_evaluation(uniformize(space, market, cfg), PricingPolicy::constant(2, 0));
    CHECK(ev.gain == doctest::Approx(oracle::birth_death_gain(500, market.potential_rate_at(0), 8))
                         .epsilon(1e-12));
  }

  TEST_CASE("zero admission: gain 0 and bias identically 0") {
    const MarketModel market(3.6, ReservationDistribution::uniform(500, 1200), {1300});
    const SystemConfig cfg({8, 8}, {1, 1});
    const StateSpace space(cfg.buffers());
    const UniformizedMDP mdp = uniformize(space, market, cfg);
    const PolicyEvaluation ev = policy_evaluation(mdp, PricingPolicy::constant(space.size(), 0));
    CHECK(ev.gain == 0.0);
    CHECK(ev.bias.cwiseAbs().maxCoeff() == 0.0);
    const auto pi = policy_iteration(mdp);
    CHECK(pi.gain == 0.0);
  }

  TEST_CASE("gain does not depend on the bias anchor") {
    const MarketModel market(3.6, ReservationDistribution::normal(500, 50), grid_350_750());
    const SystemConfig cfg({8, 8}, {2, 1});
    const StateSpace space(cfg.buffers());
    const UniformizedMDP mdp = uniformize(space, market, cfg);
    std::vector<std::size_t> table(space.size());
    for (std::size_t s = 0; s < table.size(); ++s) table[s] = s % market.price_count();
    const auto policy = PricingPolicy::from_indices(table, market.price_count());
    const PolicyEvaluation base = policy_evaluation(mdp, policy, 0);
    for (std::size_t anchor : {std::size_t{3}, space.size() - 1}) {
      const PolicyEvaluation other = policy_evaluation(mdp, policy, anchor);
      CHECK(other.gain == doctest::Approx(base.gain).epsilon(1e-11));
      CHECK(other.bias(Eigen::Index(anchor)) == 0.0);
      // Biases differ by a constant.
      const double shift = other.bias(0) - base.bias(0);
      CHECK((other.bias.array() - base.bias.array() - shift).abs().maxCoeff() <= 1e-9);
    }
  }

  TEST_CASE("policy iteration equals brute force on a small model") {
    const MarketModel market(3.6, ReservationDistribution::exponential(0.002), {400, 700});
    const SystemConfig cfg({8}, {1});
    const StateSpace space(cfg.buffers());
    const auto pi = policy_iteration(uniformize(space, market, cfg));
    CHECK(pi.gain == doctest::Approx(brute_force_gain(cfg, market)).epsilon(1e-9));
  }

  TEST_CASE("singleton price set gives the static policy") {
    const MarketModel market(3.6, ReservationDistribution::exponential(0.002), {500});
    const SystemConfig cfg({8, 8}, {2, 2});
    const StateSpace space(cfg.buffers());
    const auto pi = policy_iteration(uniformize(space, market, cfg));
    CHECK(pi.policy == PricingPolicy::constant(space.size(), 0));
    CHECK(pi.iterations == 1);
  }

  TEST_CASE("optimal dynamic gain dominates static gains, respects the upper bound, and the "
            "gain history is non-decreasing") {
    for (const auto& dist : {ReservationDistribution::exponential(0.002),
                             ReservationDistribution::uniform(500, 1200),
                             ReservationDistribution::normal(500, 50)}) {
      const MarketModel market(3.6, dist, grid_350_750());
      const double m = upper_bound_price(market).bound;
      for (const auto& cfg : {SystemConfig({8, 8}, {2, 0}), SystemConfig({8, 8}, {4, 5}),
                              SystemConfig({8, 8, 8}, {2, 1, 0})}) {
        const StateSpace space(cfg.buffers());
        PolicyIterationOptions opts;
        opts.initial_policy = PricingPolicy::constant(space.size(), 0);
        const auto pi = policy_iteration(uniformize(space, market, cfg), opts);
        CHECK(pi.gain >= optimal_static(cfg, market).best_gain() * (1.0 - 1e-12));
        CHECK(pi.gain <= m * (1.0 + 1e-9));
        for (std::size_t i = 1; i < pi.gain_history.size(); ++i) {
          CHECK(pi.gain_history[i] >= pi.gain_history[i - 1] * (1.0 - 1e-12));
        }
        CHECK(pi.policy.size() == space.size());
      }
    }
  }

  TEST_CASE("optimal gain is non-decreasing in B1 on the exponential and uniform markets") {
    for (const auto& dist : {ReservationDistribution::exponential(0.002),
                             ReservationDistribution::uniform(500, 1200)}) {
      const MarketModel market(3.6, dist, grid_350_750());
      double previous = 0.0;
      for (int b1 = 0; b1 <= 12; ++b1) {
        const SystemConfig cfg({8, 8}, {b1, 5});
        const StateSpace space(cfg.buffers());
        const double g = policy_iteration(uniformize(space, market, cfg)).gain;
        CHECK(g >= previous * (1.0 - 1e-12));
        previous = g;
      }
    }
  }

  TEST_CASE("iteration cap raises a convergence error") {
    const MarketModel market(3.6, ReservationDistribution::exponential(0.002), grid_350_750());
    const SystemConfig cfg({8, 8}, {3, 3});
    const StateSpace space(cfg.buffers());
    PolicyIterationOptions opts;
    opts.max_iterations = 1;
    opts.initial_policy = PricingPolicy::constant(space.size(), 0);
    CHECK_THROWS_AS(policy_iteration(uniformize(space, market, cfg), opts), ConvergenceError);
  }
}
