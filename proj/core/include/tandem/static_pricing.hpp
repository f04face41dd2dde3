#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tandem/market.hpp"
#include "tandem/qbd.hpp"

namespace tandem {

struct StaticRecord {
  double price = 0.0;
  double potential_rate = 0.0;
  double blocking = 0.0;
  double gain = 0.0;  // price * potential_rate * (1 - blocking)
};

struct StaticSweepResult {
  std::vector<StaticRecord> records;  // one per price, in price order
  std::size_t best_index = 0;         // ties go to the smallest price

  const StaticRecord& best() const { return records.at(best_index); }
  double best_price() const { return best().price; }
  double best_gain() const { return best().gain; }
};

// Gain of the static policy at price_index via the exact stationary solve.
StaticRecord evaluate_static(const SystemConfig& config, const MarketModel& market,
                             std::size_t price_index);

// Evaluates every static policy. Solver failures are rethrown with the
// offending price in the message.
StaticSweepResult optimal_static(const SystemConfig& config, const MarketModel& market);

struct UpperBoundResult {
  double price = 0.0;               // a*
  std::size_t index = 0;
  double bound = 0.0;               // M = a* lambda (1 - F(a*-))
  std::vector<double> objective;    // a lambda (1 - F(a-)) per price
};

// argmax over the market's price set of a * lambda * (1 - F(a-)), ties to the
// smallest price.
UpperBoundResult upper_bound_price(const MarketModel& market);

// Same objective over an arbitrary candidate set. This is the hook for
// continuous price ranges: a caller can search a continuous interval by
// passing a refined candidate grid, or replace this with its own optimizer and
// feed the result into a single-price MarketModel.
UpperBoundResult upper_bound_price(const MarketModel& market, std::span<const double> candidates);

// Gain of the simple static policy at a*.
double simple_policy_gain(const SystemConfig& config, const MarketModel& market);

struct LowerBound {
  double value = 0.0;  // a lambda_a (1 - c p^{B1 - 1}), clamped at 0
  bool valid = false;  // false when B1 < N ("bound not yet valid")
  std::optional<BoundConstants> constants;  // empty when lambda_a == 0
};

/// Static-policy gain lower bound a * lambda_a * (1 - c p^{B1-1}).
/// Throws InapplicableError when lambda_a * sum(1/mu) >= 1.
LowerBound static_gain_lower_bound(double price, const SystemConfig& config,
                                const MarketModel& market);

struct BoundReport {
  double upper_bound = 0.0;  // M
  double simple_price = 0.0;
  double simple_gain = 0.0;
  double static_price = 0.0;
  double static_gain = 0.0;
  std::optional<double> dynamic_gain;
  std::optional<LowerBound> lower_bound;  // empty when inapplicable
  std::optional<double> relative_gap;     // (dynamic - simple) / dynamic, dynamic > 0
};

// (true - simple) / true; empty unless true_gain > 0.
std::optional<double> relative_gap(double true_gain, double simple_gain);

// Assembles the bound report; the dynamic gain is computed by policy
// iteration when `with_dynamic` is set.
BoundReport bound_report(const SystemConfig& config, const MarketModel& market, bool with_dynamic);

}  // namespace tandem
