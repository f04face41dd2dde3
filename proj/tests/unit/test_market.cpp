#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tandem/error.hpp"
#include "tandem/market.hpp"

using namespace tandem;

namespace {

std::vector<double> grid_350_750() {
  std::vector<double> p;
  for (int a = 350; a <= 750; a += 50) p.push_back(a);
  return p;
}

}  // namespace

TEST_SUITE("market") {
  TEST_CASE("survival examples") {
    CHECK(survival(ReservationDistribution::exponential(0.002), 500.0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(survival(ReservationDistribution::exponential(0.002), 500.0) ==
          doctest::Approx(0.3678794).epsilon(1e-7));
    CHECK(survival(ReservationDistribution::uniform(500, 1200), 500.0) == 1.0);
    const double normal = survival(ReservationDistribution::normal(500, 50), 600.0);
    CHECK(normal == doctest::Approx(oracle::normal_tail(500, 50, 600)).epsilon(1e-10));
    CHECK(normal == doctest::Approx(0.0227501).epsilon(1e-6));
  }

  TEST_CASE("survival matches the quadrature oracle across the normal support") {
    const auto d = ReservationDistribution::normal(500, 50);
    for (double a = 0; a <= 1000; a += 37.5) {
      CHECK(d.survival(a) == doctest::Approx(oracle::normal_tail(500, 50, a)).epsilon(1e-9));
    }
  }

  TEST_CASE("uniform survival is linear inside the support and clamps outside") {
    const auto d = ReservationDistribution::uniform(500, 1200);
    CHECK(d.survival(0.0) == 1.0);
    CHECK(d.survival(850.0) == doctest::Approx(0.5));
    CHECK(d.survival(1200.0) == 0.0);
    CHECK(d.survival(1300.0) == 0.0);
  }

  TEST_CASE("empirical survival uses left limits") {
    const auto d = ReservationDistribution::empirical({300, 100, 200}, {0.5, 0.25, 0.25});
    CHECK(d.survival(100.0) == 1.0);
    CHECK(d.survival(100.0 + 1e-9) == doctest::Approx(0.75));
    CHECK(d.survival(200.0) == doctest::Approx(0.75));
    CHECK(d.survival(250.0) == doctest::Approx(0.5));
    CHECK(d.survival(300.0) == doctest::Approx(0.5));
    CHECK(d.survival(300.5) == 0.0);
    CHECK(d.kind() == "empirical");
  }

  TEST_CASE("empirical merges duplicate points") {
    const auto d = ReservationDistribution::empirical({1, 1, 2}, {0.25, 0.25, 0.5});
    const auto& law = std::get<Empirical>(d.law());
    CHECK(law.points.size() == 2);
    CHECK(law.weights[0] == doctest::Approx(0.5));
  }

  TEST_CASE("invalid distribution parameters are configuration errors") {
    CHECK_THROWS_AS(ReservationDistribution::exponential(0.0), ConfigError);
    CHECK_THROWS_AS(ReservationDistribution::exponential(-1.0), ConfigError);
    CHECK_THROWS_AS(ReservationDistribution::uniform(5, 5), ConfigError);
    CHECK_THROWS_AS(ReservationDistribution::uniform(6, 5), ConfigError);
    CHECK_THROWS_AS(ReservationDistribution::normal(0, 0), ConfigError);
    CHECK_THROWS_AS(ReservationDistribution::empirical({1, 2}, {0.5, 0.6}), ConfigError);
    CHECK_THROWS_AS(ReservationDistribution::empirical({1, 2}, {1.0, 0.0}), ConfigError);
    CHECK_THROWS_AS(ReservationDistribution::empirical({}, {}), ConfigError);
    CHECK_THROWS_AS(ReservationDistribution::empirical({1}, {0.5, 0.5}), ConfigError);
  }

  TEST_CASE("negative prices are outside the domain") {
    CHECK_THROWS_AS(ReservationDistribution::exponential(1.0).survival(-1.0), DomainError);
  }

  TEST_CASE("potential rate examples") {
    const MarketModel exp(3.6, ReservationDistribution::exponential(0.002), grid_350_750());
    CHECK(potential_rate(exp, 500) == doctest::Approx(1.3243660).epsilon(1e-7));
    const MarketModel uni(3.6, ReservationDistribution::uniform(500, 1200), {300, 450, 1300});
    CHECK(potential_rate(uni, 300) == 3.6);
    CHECK(potential_rate(uni, 450) == 3.6);
    CHECK(potential_rate(uni, 1300) == 0.0);
    CHECK_THROWS_AS(potential_rate(uni, 500), DomainError);
    CHECK(uni.price_index(1300) == 2);
  }

  TEST_CASE("market validation") {
    const auto d = ReservationDistribution::exponential(0.002);
    CHECK_THROWS_AS(MarketModel(0.0, d, {1}), ConfigError);
    CHECK_THROWS_AS(MarketModel(INFINITY, d, {1}), ConfigError);
    CHECK_THROWS_AS(MarketModel(1.0, d, {}), ConfigError);
    CHECK_THROWS_AS(MarketModel(1.0, d, {2, 1}), ConfigError);
    CHECK_THROWS_AS(MarketModel(1.0, d, {1, 1}), ConfigError);
    CHECK_THROWS_AS(MarketModel(1.0, d, {-1, 1}), ConfigError);
    const MarketModel m(1.0, d, {0, 1});
    CHECK(m.with_lambda(2.0).potential_rate_at(0) == 2.0);
    CHECK_THROWS_AS(m.with_lambda(-2.0), ConfigError);
  }

  TEST_CASE("utilization examples") {
    CHECK(utilization(SystemConfig({8, 8}, {0, 0}), 3.6) == doctest::Approx(0.9));
    CHECK(utilization(SystemConfig({2.5}, {0}), 2.5) == 1.0);
    CHECK(utilization(SystemConfig({8, 8, 8}, {0, 0, 0}), 3.6) == doctest::Approx(1.35));
  }

  TEST_CASE("system config validation") {
    CHECK_THROWS_AS(SystemConfig({}, {}), ConfigError);
    CHECK_THROWS_AS(SystemConfig({1}, {0, 0}), ConfigError);
    CHECK_THROWS_AS(SystemConfig({0}, {0}), ConfigError);
    CHECK_THROWS_AS(SystemConfig({1}, {-1}), ConfigError);
    CHECK_THROWS_AS(SystemConfig({NAN}, {1}), ConfigError);
    const SystemConfig c({8, 4}, {3, 1});
    CHECK(c.with_first_buffer(7).buffer(0) == 7);
    CHECK(c.with_first_buffer(7).buffer(1) == 1);
    CHECK(c.mean_service() == doctest::Approx(0.375));
  }

  TEST_CASE("property: survival is non-increasing, in [0,1], and starts at 1") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 2000.0);
    const std::vector<ReservationDistribution> laws{
        ReservationDistribution::exponential(0.002), ReservationDistribution::uniform(500, 1200),
        ReservationDistribution::normal(500, 50),
        ReservationDistribution::empirical({100, 450, 900}, {0.2, 0.3, 0.5})};
    for (const auto& d : laws) {
      if (d.kind() != "normal") CHECK(d.survival(0.0) == 1.0);
      for (int i = 0; i < 500; ++i) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        CHECK(d.survival(a) >= d.survival(b));
        CHECK(d.survival(a) >= 0.0);
        CHECK(d.survival(a) <= 1.0);
      }
    }
  }

  TEST_CASE("property: potential rate is lambda times survival exactly") {
    const auto d = ReservationDistribution::normal(500, 50);
    const MarketModel m(3.6, d, grid_350_750());
    for (std::size_t i = 0; i < m.price_count(); ++i) {
      CHECK(m.potential_rate_at(i) == 3.6 * d.survival(m.price(i)));
      CHECK(potential_rate(m, m.price(i)) == m.potential_rate_at(i));
    }
  }
}
