#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "tandem/ctmc.hpp"
#include "tandem/error.hpp"
#include "tandem/static_pricing.hpp"

using namespace tandem;

namespace {

std::vector<double> grid_350_750() {
  std::vector<double> p;
  for (int a = 350; a <= 750; a += 50) p.push_back(a);
  return p;
}

MarketModel exponential_market() {
  return MarketModel(3.6, ReservationDistribution::exponential(0.002), grid_350_750());
}

// Index into the library's state space of an explicit state vector.
std::size_t at(const StateSpace& s, std::vector<int> v) { return s.index(v); }

}  // namespace

TEST_SUITE("ctmc") {
  TEST_CASE("blocking rule: no internal move into a full downstream station") {
    const SystemConfig cfg({8, 8}, {1, 2});
    const StateSpace space(cfg.buffers());
    const auto market = exponential_market();
    const Generator q = build_generator(space, PricingPolicy::constant(space.size(), 0), market, cfg);
    const std::size_t s = at(space, {1, 3});
    CHECK(q.rates.coeff(s, at(space, {0, 4 - 1})) == 0.0);
    CHECK(q.rates.coeff(s, at(space, {1, 2})) == 8.0);
    CHECK(q.rates.coeff(s, at(space, {2, 3})) == doctest::Approx(market.potential_rate_at(0)));
    const std::size_t full = at(space, {2, 0});
    CHECK(q.rates.coeff(full, at(space, {1, 1})) == 8.0);
  }

  TEST_CASE("two-state chain for J=1, B1=0") {
    const SystemConfig cfg({8}, {0});
    const StateSpace space(cfg.buffers());
    const auto market = exponential_market();
    const std::size_t a = market.price_index(500);
    const Generator q = build_generator(space, PricingPolicy::constant(2, a), market, cfg);
    const double rate = market.potential_rate_at(a);
    CHECK(q.rates.coeff(0, 1) == doctest::Approx(rate));
    CHECK(q.rates.coeff(1, 0) == 8.0);
    CHECK(q.rates.coeff(0, 0) == doctest::Approx(-rate));
    CHECK(q.max_row_sum_error() <= 1e-12);
  }

  TEST_CASE("M/M/1/1 stationary law, blocking and gain") {
    const SystemConfig cfg({8}, {0});
    const StateSpace space(cfg.buffers());
    const auto market = exponential_market();
    const std::size_t a = market.price_index(500);
    const double rate = market.potential_rate_at(a);
    const SteadyState s = solve_steady_state(space, PricingPolicy::constant(2, a), market, cfg);
    CHECK(s.eta(0) == doctest::Approx(0.85798).epsilon(1e-5));
    CHECK(s.eta(1) == doctest::Approx(0.14202).epsilon(1e-4));
    CHECK(s.eta(0) == doctest::Approx(8.0 / (rate + 8.0)).epsilon(1e-14));
    CHECK(s.blocking == doctest::Approx(rate / (rate + 8.0)).epsilon(1e-14));
    CHECK(s.gain == doctest::Approx(oracle::birth_death_gain(500, rate, 8.0)).epsilon(1e-13));
    CHECK(std::abs(s.gain - 568.14) <= 0.01);
  }

  TEST_CASE("symmetric two-state chain") {
    std::vector<Eigen::Triplet<double>> t{{0, 1, 3.0}, {1, 0, 3.0}};
    const Eigen::VectorXd eta = stationary_distribution(Generator::from_transitions(2, t));
    CHECK(eta(0) == doctest::Approx(0.5));
    CHECK(eta(1) == doctest::Approx(0.5));
  }

  TEST_CASE("zero potential rate: empty system, zero blocking and gain") {
    const SystemConfig cfg({8, 8}, {2, 1});
    const StateSpace space(cfg.buffers());
    const MarketModel market(3.6, ReservationDistribution::uniform(500, 1200), {1300});
    const SteadyState s =
        solve_steady_state(space, PricingPolicy::constant(space.size(), 0), market, cfg);
    CHECK(s.eta(0) == doctest::Approx(1.0));
    CHECK(s.blocking == 0.0);
    CHECK(s.gain == 0.0);
    CHECK(s.residual <= kStationaryResidualTolerance);
  }

  TEST_CASE("M/M/1/K closed forms") {
    for (double r : {0.3, 0.5, 0.9, 1.0, 1.7}) {
      for (int k = 1; k <= 10; ++k) {
        const double mu = 8.0;
        const MarketModel market(r * mu, ReservationDistribution::exponential(1.0), {0.0});
        const SystemConfig cfg({mu}, {k - 1});
        const StateSpace space(cfg.buffers());
        const SteadyState s =
            solve_steady_state(space, PricingPolicy::constant(space.size(), 0), market, cfg);
        const auto eta = oracle::mm1k_distribution(r, k);
        for (int n = 0; n <= k; ++n) CHECK(std::abs(s.eta(n) - eta[std::size_t(n)]) <= 1e-12);
        CHECK(std::abs(s.blocking - oracle::mm1k_blocking(r, k)) <= 1e-12);
      }
    }
  }

  TEST_CASE("generator and stationary law agree with an independent dense construction") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> b(0, 3), jd(1, 3);
    std::uniform_real_distribution<double> mu_d(0.5, 10.0);
    const MarketModel market(3.6, ReservationDistribution::normal(500, 50), grid_350_750());
    std::uniform_int_distribution<std::size_t> act(0, market.price_count() - 1);
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<int> buffers(static_cast<std::size_t>(jd(rng)));
      std::vector<double> mu(buffers.size());
      for (auto& x : buffers) x = b(rng);
      for (auto& m : mu) m = mu_d(rng);
      const SystemConfig cfg(mu, buffers);
      const StateSpace space(buffers);
      std::vector<std::size_t> table(space.size());
      for (auto& t : table) t = act(rng);
      const auto policy = PricingPolicy::from_indices(table, market.price_count());
      const Generator q = build_generator(space, policy, market, cfg);

      const auto dense = oracle::tandem_chain(buffers, mu, [&](const std::vector<int>& s) {
        return market.potential_rate_at(policy[space.index(s)]);
      });
      Eigen::MatrixXd lib = Eigen::MatrixXd(q.rates);
      for (std::size_t i = 0; i < dense.states.size(); ++i) {
        for (std::size_t k = 0; k < dense.states.size(); ++k) {
          CHECK(lib(space.index(dense.states[i]), space.index(dense.states[k])) ==
                doctest::Approx(dense.q(Eigen::Index(i), Eigen::Index(k))));
        }
      }
      CHECK(q.max_row_sum_error() <= 1e-12);
      CHECK(q.max_off_diagonals() <= buffers.size() + 1);
      CHECK(q.min_off_diagonal() >= 0.0);

      const SteadyState s = solve_steady_state(space, policy, market, cfg);
      const Eigen::VectorXd ref = oracle::dense_stationary(dense.q);
      for (std::size_t i = 0; i < dense.states.size(); ++i) {
        CHECK(s.eta(Eigen::Index(space.index(dense.states[i]))) ==
              doctest::Approx(ref(Eigen::Index(i))).epsilon(1e-9));
      }
      CHECK(s.eta.minCoeff() >= 0.0);
      CHECK(std::abs(s.eta.sum() - 1.0) <= kNormalizationTolerance);
      CHECK(s.residual <= kStationaryResidualTolerance);
      CHECK(stationary_residual(q, s.eta) == doctest::Approx(s.residual));
    }
  }

  TEST_CASE("property: static gain identity and the upper bound over random policies") {
    std::mt19937_64 rng(5);
    const MarketModel market(3.6, ReservationDistribution::normal(500, 50), grid_350_750());
    const double m = upper_bound_price(market).bound;
    std::uniform_int_distribution<std::size_t> act(0, market.price_count() - 1);
    for (const auto& buffers : {std::vector<int>{0}, std::vector<int>{3, 1}, std::vector<int>{2, 0, 1}}) {
      const SystemConfig cfg(std::vector<double>(buffers.size(), 8.0), buffers);
      const StateSpace space(buffers);
      for (std::size_t a = 0; a < market.price_count(); ++a) {
        const SteadyState s =
            solve_steady_state(space, PricingPolicy::constant(space.size(), a), market, cfg);
        const double identity = market.price(a) * market.potential_rate_at(a) * (1.0 - s.blocking);
        CHECK(s.gain == doctest::Approx(identity).epsilon(1e-10));
      }
      for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::size_t> table(space.size());
        for (auto& t : table) t = act(rng);
        const auto policy = PricingPolicy::from_indices(table, market.price_count());
        const SteadyState s = solve_steady_state(space, policy, market, cfg);
        CHECK(s.gain <= m * (1.0 + 1e-12));
        CHECK(s.blocking >= 0.0);
        CHECK(s.blocking <= 1.0);
      }
    }
  }

  TEST_CASE("property: static blocking is non-increasing in B1") {
    const MarketModel market = exponential_market();
    for (const auto& base : {SystemConfig({8}, {0}), SystemConfig({8, 8}, {0, 5}),
                             SystemConfig({8, 8}, {0, 0}), SystemConfig({8, 6, 9}, {0, 1, 0})}) {
      for (std::size_t a = 0; a < market.price_count(); a += 4) {
        double previous = 1.0;
        for (int b1 = 0; b1 <= 20; ++b1) {
          const SystemConfig cfg = base.with_first_buffer(b1);
          const StateSpace space(cfg.buffers());
          const double beta =
              solve_steady_state(space, PricingPolicy::constant(space.size(), a), market, cfg)
                  .blocking;
          CHECK(beta <= previous + 1e-15);
          previous = beta;
        }
      }
    }
  }
}
