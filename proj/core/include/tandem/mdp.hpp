#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tandem/market.hpp"
#include "tandem/state_space.hpp"

namespace tandem {

/// Discrete-time MDP obtained by uniformizing the pricing CTMC at rate
/// Lambda = lambda + sum_j mu_j. Actions are price indices.
///
/// Transition rows are stored CSR-style per (state, action) pair; the
/// self-loop absorbs the slack 1 - (total rate)/Lambda. The one-step reward is
/// the continuized rate reward divided by Lambda, so per-step gain times
/// Lambda equals the CTMC gain.
class UniformizedMDP {
 public:
  struct Entry {
    std::size_t target;
    double probability;
  };

  std::size_t states() const noexcept { return states_; }
  std::size_t actions() const noexcept { return actions_; }
  double uniformization_rate() const noexcept { return uniformization_; }

  std::span<const Entry> row(std::size_t state, std::size_t action) const {
    auto k = state * actions_ + action;
    return {entries_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
  }
  double reward(std::size_t state, std::size_t action) const {
    return rewards_[state * actions_ + action];
  }

  friend UniformizedMDP uniformize(const StateSpace& space, const MarketModel& market,
                                   const SystemConfig& config);

 private:
  std::size_t states_ = 0;
  std::size_t actions_ = 0;
  double uniformization_ = 0.0;
  std::vector<std::size_t> offsets_;
  std::vector<Entry> entries_;
  std::vector<double> rewards_;
};

UniformizedMDP uniformize(const StateSpace& space, const MarketModel& market,
                          const SystemConfig& config);

struct PolicyEvaluation {
  double gain = 0.0;      // per unit time (rescaled by Lambda)
  Eigen::VectorXd bias;   // per-step bias, bias(anchor) == 0
};

// Solves g + h(s) = r(s, pi(s)) + sum_t P(t | s, pi(s)) h(t) with h(anchor) = 0.
PolicyEvaluation policy_evaluation(const UniformizedMDP& mdp, const PricingPolicy& policy,
                                   std::size_t anchor = 0);

struct PolicyIterationOptions {
  std::size_t max_iterations = 10'000;
  // An action replaces the incumbent only if it beats it by more than
  // improvement_tolerance * max(1, |incumbent value|).
  double improvement_tolerance = 1e-10;
  std::optional<PricingPolicy> initial_policy;
};

struct PolicyIterationResult {
  PricingPolicy policy;
  double gain = 0.0;
  Eigen::VectorXd bias;
  std::size_t iterations = 0;
  std::vector<double> gain_history;  // gain of each evaluated policy
};

/// Unichain average-reward policy iteration. Starts from the static policy at
/// the maximizer of a * lambda_a unless an initial policy is supplied. Prices
/// are scanned in increasing order; ties keep the incumbent action.
/// Throws ConvergenceError after max_iterations sweeps.
PolicyIterationResult policy_iteration(const UniformizedMDP& mdp,
                                       const PolicyIterationOptions& options = {});

}  // namespace tandem
