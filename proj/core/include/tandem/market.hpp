#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace tandem {

// Reservation-price laws. Parameters are validated by ReservationDistribution.
struct Exponential {
  double rate;
};

struct Uniform {
  double lo;
  double hi;
};

struct Normal {
  double mean;
  double sd;
};

// Weighted point masses. Points are kept sorted ascending and distinct.
struct Empirical {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Distribution F of a customer's reservation price.
///
/// survival(a) returns 1 - F(a-), the probability that a customer is willing
/// to pay a quote of a. Continuous laws use 1 - F(a); Empirical counts the
/// mass at points >= a, so a customer whose reservation price equals the
/// quote enters.
class ReservationDistribution {
 public:
  using Law = std::variant<Exponential, Uniform, Normal, Empirical>;

  static ReservationDistribution exponential(double rate);
  static ReservationDistribution uniform(double lo, double hi);
  static ReservationDistribution normal(double mean, double sd);
  // Weights must be positive and sum to 1 within 1e-12. Points are sorted;
  // duplicate points are merged.
  static ReservationDistribution empirical(std::vector<double> points,
                                           std::vector<double> weights);

  double survival(double price) const;

  std::string_view kind() const;
  const Law& law() const noexcept { return law_; }

 private:
  explicit ReservationDistribution(Law law) : law_(std::move(law)) {}
  Law law_;
};

double survival(const ReservationDistribution& dist, double price);

/// Arrival rate, reservation-price law and the ordered admissible price set.
class MarketModel {
 public:
  // Throws ConfigError unless lambda is finite and positive and prices are
  // nonempty, finite, non-negative and strictly increasing.
  MarketModel(double lambda, ReservationDistribution distribution,
              std::vector<double> prices);

  double lambda() const noexcept { return lambda_; }
  const ReservationDistribution& distribution() const noexcept { return distribution_; }
  std::span<const double> prices() const noexcept { return prices_; }
  std::size_t price_count() const noexcept { return prices_.size(); }
  double price(std::size_t index) const { return prices_.at(index); }

  // Index of an exact member of the price set; DomainError otherwise.
  std::size_t price_index(double price) const;

  // lambda * (1 - F(a-)) for the price at `index`; precomputed.
  double potential_rate_at(std::size_t index) const { return potential_rates_.at(index); }

  // Same model with a different arrival rate.
  MarketModel with_lambda(double lambda) const;

 private:
  double lambda_;
  ReservationDistribution distribution_;
  std::vector<double> prices_;
  std::vector<double> potential_rates_;
};

// lambda_a = lambda * (1 - F(a-)). DomainError if a is not in the price set.
double potential_rate(const MarketModel& market, double price);

/// Service rates and buffer sizes of a J-station tandem line.
class SystemConfig {
 public:
  // Throws ConfigError unless J >= 1, mu.size() == buffers.size(), all rates
  // finite and positive, all buffers non-negative.
  SystemConfig(std::vector<double> mu, std::vector<int> buffers);

  std::size_t stations() const noexcept { return mu_.size(); }
  std::span<const double> mu() const noexcept { return mu_; }
  std::span<const int> buffers() const noexcept { return buffers_; }
  double mu(std::size_t j) const { return mu_.at(j); }
  int buffer(std::size_t j) const { return buffers_.at(j); }

  // Mean total service requirement, sum_j 1/mu_j.
  double mean_service() const noexcept;

  SystemConfig with_first_buffer(int b1) const;

 private:
  std::vector<double> mu_;
  std::vector<int> buffers_;
};

// rho = lambda * sum_j 1/mu_j.
double utilization(const SystemConfig& config, double lambda);

}  // namespace tandem
