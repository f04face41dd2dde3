#include "tandem/static_pricing.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tandem/ctmc.hpp"
#include "tandem/error.hpp"
#include "tandem/mdp.hpp"
#include "tandem/state_space.hpp"

namespace tandem {

StaticRecord evaluate_static(const SystemConfig& config, const MarketModel& market,
                             std::size_t price_index) {
  const StateSpace space(config.buffers());
  const auto policy = PricingPolicy::constant(space.size(), price_index);
  const SteadyState steady = solve_steady_state(space, policy, market, config);
  StaticRecord rec;
  rec.price = market.price(price_index);
  rec.potential_rate = market.potential_rate_at(price_index);
  rec.blocking = steady.blocking;
  rec.gain = rec.price * rec.potential_rate * (1.0 - rec.blocking);
  return rec;
}

StaticSweepResult optimal_static(const SystemConfig& config, const MarketModel& market) {
  StaticSweepResult out;
  out.records.reserve(market.price_count());
  for (std::size_t a = 0; a < market.price_count(); ++a) {
    try {
      out.records.push_back(evaluate_static(config, market, a));
    } catch (const NumericalError& e) {
      throw NumericalError(fmt::format("static policy at price {}: {}", market.price(a), e.what()),
                           e.residual());
    }
    if (out.records.back().gain > out.records[out.best_index].gain) out.best_index = a;
  }
  return out;
}

UpperBoundResult upper_bound_price(const MarketModel& market) {
  UpperBoundResult out;
  out.objective.reserve(market.price_count());
  for (std::size_t a = 0; a < market.price_count(); ++a) {
    out.objective.push_back(market.price(a) * market.potential_rate_at(a));
    if (out.objective[a] > out.objective[out.index]) out.index = a;
  }
  out.price = market.price(out.index);
  out.bound = out.objective[out.index];
  return out;
}

UpperBoundResult upper_bound_price(const MarketModel& market, std::span<const double> candidates) {
  if (candidates.empty()) throw DomainError("candidate price set is empty");
  std::vector<double> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  UpperBoundResult out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    out.objective.push_back(sorted[i] * market.lambda() * market.distribution().survival(sorted[i]));
    if (out.objective[i] > out.objective[out.index]) out.index = i;
  }
  out.price = sorted[out.index];
  out.bound = out.objective[out.index];
  return out;
}

double simple_policy_gain(const SystemConfig& config, const MarketModel& market) {
  return evaluate_static(config, market, upper_bound_price(market).index).gain;
}

LowerBound static_gain_lower_bound(double price, const SystemConfig& config,
                                const MarketModel& market) {
  const double rate = potential_rate(market, price);
  LowerBound out;
  if (rate == 0.0) {
    out.valid = true;
    return out;
  }
  const double load = rate * config.mean_service();
  if (!(load < 1.0)) {
    throw InapplicableError(
        fmt::format("lower bound needs lambda_a * sum(1/mu) < 1, got {:.6g}", load));
  }
  BoundConstants k = bound_constants(rate, config.mu());
  const int b1 = config.buffer(0);
  out.valid = static_cast<std::size_t>(std::max(b1, 0)) >= k.n_threshold;
  const double decay = k.c * std::pow(k.p, static_cast<double>(b1 - 1));
  out.value = std::max(0.0, price * rate * (1.0 - decay));
  out.constants = std::move(k);
  return out;
}

std::optional<double> relative_gap(double true_gain, double simple_gain) {
  if (!(true_gain > 0.0)) return std::nullopt;
  return (true_gain - simple_gain) / true_gain;
}

BoundReport bound_report(const SystemConfig& config, const MarketModel& market, bool with_dynamic) {
  const UpperBoundResult upper = upper_bound_price(market);
  const StaticSweepResult statics = optimal_static(config, market);

  BoundReport out;
  out.upper_bound = upper.bound;
  out.simple_price = upper.price;
  out.simple_gain = statics.records[upper.index].gain;
  out.static_price = statics.best_price();
  out.static_gain = statics.best_gain();
  try {
    out.lower_bound = static_gain_lower_bound(upper.price, config, market);
  } catch (const InapplicableError&) {
    out.lower_bound.reset();
  }
  if (with_dynamic) {
    const StateSpace space(config.buffers());
    const UniformizedMDP mdp = uniformize(space, market, config);
    out.dynamic_gain = policy_iteration(mdp).gain;
    out.relative_gap = relative_gap(*out.dynamic_gain, out.simple_gain);
  }
  return out;
}

}  // namespace tandem
