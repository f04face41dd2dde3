#include "tandem/market.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "tandem/error.hpp"

namespace tandem {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

ReservationDistribution ReservationDistribution::exponential(double rate) {
  if (!positive_finite(rate)) {
    throw ConfigError(fmt::format("exponential rate must be positive, got {}", rate));
  }
  return ReservationDistribution(Exponential{rate});
}

ReservationDistribution ReservationDistribution::uniform(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw ConfigError(fmt::format("uniform bounds need lo < hi, got [{}, {}]", lo, hi));
  }
  return ReservationDistribution(Uniform{lo, hi});
}

ReservationDistribution ReservationDistribution::normal(double mean, double sd) {
  if (!std::isfinite(mean) || !positive_finite(sd)) {
    throw ConfigError(fmt::format("normal needs finite mean and sd > 0, got ({}, {})", mean, sd));
  }
  return ReservationDistribution(Normal{mean, sd});
}

ReservationDistribution ReservationDistribution::empirical(std::vector<double> points,
                                                           std::vector<double> weights) {
  if (points.empty() || points.size() != weights.size()) {
    throw ConfigError("empirical distribution needs matching, nonempty points and weights");
  }
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });

  Empirical law;
  double total = 0.0;
  for (std::size_t i : order) {
    if (!std::isfinite(points[i]) || !positive_finite(weights[i])) {
      throw ConfigError("empirical points must be finite and weights positive");
    }
    total += weights[i];
    if (!law.points.empty() && law.points.back() == points[i]) {
      law.weights.back() += weights[i];
    } else {
      law.points.push_back(points[i]);
      law.weights.push_back(weights[i]);
    }
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError(fmt::format("empirical weights must sum to 1, got {:.17g}", total));
  }
  return ReservationDistribution(std::move(law));
}

double ReservationDistribution::survival(double a) const {
  if (!(a >= 0.0) || !std::isfinite(a)) {
    throw DomainError(fmt::format("price must be finite and non-negative, got {}", a));
  }
  return std::visit(
      overloaded{
          [a](const Exponential& d) { return std::exp(-d.rate * a); },
          [a](const Uniform& d) {
            if (a <= d.lo) return 1.0;
            if (a >= d.hi) return 0.0;
            return (d.hi - a) / (d.hi - d.lo);
          },
          [a](const Normal& d) { return 0.5 * std::erfc((a - d.mean) / (d.sd * std::sqrt(2.0))); },
          [a](const Empirical& d) {
            auto first = std::lower_bound(d.points.begin(), d.points.end(), a);
            auto offset = static_cast<std::size_t>(first - d.points.begin());
            double mass = 0.0;
            for (std::size_t i = offset; i < d.weights.size(); ++i) mass += d.weights[i];
            return std::clamp(mass, 0.0, 1.0);
          },
      },
      law_);
}

std::string_view ReservationDistribution::kind() const {
  return std::visit(overloaded{
                        [](const Exponential&) { return std::string_view("exponential"); },
                        [](const Uniform&) { return std::string_view("uniform"); },
                        [](const Normal&) { return std::string_view("normal"); },
                        [](const Empirical&) { return std::string_view("empirical"); },
                    },
                    law_);
}

double survival(const ReservationDistribution& dist, double price) { return dist.survival(price); }

MarketModel::MarketModel(double lambda, ReservationDistribution distribution,
                         std::vector<double> prices)
    : lambda_(lambda), distribution_(std::move(distribution)), prices_(std::move(prices)) {
  if (!positive_finite(lambda_)) {
    throw ConfigError(fmt::format("lambda must be finite and positive, got {}", lambda_));
  }
  if (prices_.empty()) throw ConfigError("price set must be nonempty");
  for (std::size_t i = 0; i < prices_.size(); ++i) {
    if (!std::isfinite(prices_[i]) || prices_[i] < 0.0) {
      throw ConfigError(fmt::format("prices must be finite and non-negative, got {}", prices_[i]));
    }
    if (i > 0 && !(prices_[i - 1] < prices_[i])) {
      throw ConfigError("prices must be strictly increasing");
    }
  }
  potential_rates_.reserve(prices_.size());
  for (double a : prices_) potential_rates_.push_back(lambda_ * distribution_.survival(a));
}

std::size_t MarketModel::price_index(double price) const {
  auto it = std::lower_bound(prices_.begin(), prices_.end(), price);
  if (it == prices_.end() || *it != price) {
    throw DomainError(fmt::format("price {} is not in the admissible price set", price));
  }
  return static_cast<std::size_t>(it - prices_.begin());
}

MarketModel MarketModel::with_lambda(double lambda) const {
  return MarketModel(lambda, distribution_, prices_);
}

double potential_rate(const MarketModel& market, double price) {
  return market.potential_rate_at(market.price_index(price));
}

SystemConfig::SystemConfig(std::vector<double> mu, std::vector<int> buffers)
    : mu_(std::move(mu)), buffers_(std::move(buffers)) {
  if (mu_.empty()) throw ConfigError("at least one station is required");
  if (mu_.size() != buffers_.size()) {
    throw ConfigError(fmt::format("mu has {} entries but buffers has {}", mu_.size(),
                                  buffers_.size()));
  }
  for (double m : mu_) {
    if (!positive_finite(m)) {
      throw ConfigError(fmt::format("service rates must be finite and positive, got {}", m));
    }
  }
  for (int b : buffers_) {
    if (b < 0) throw ConfigError(fmt::format("buffer sizes must be non-negative, got {}", b));
  }
}

double SystemConfig::mean_service() const noexcept {
  double total = 0.0;
  for (double m : mu_) total += 1.0 / m;
  return total;
}

SystemConfig SystemConfig::with_first_buffer(int b1) const {
  auto buffers = buffers_;
  buffers.front() = b1;
  return SystemConfig(mu_, std::move(buffers));
}

double utilization(const SystemConfig& config, double lambda) {
  return lambda * config.mean_service();
}

}  // namespace tandem
