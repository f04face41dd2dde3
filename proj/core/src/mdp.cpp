#include "tandem/mdp.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "tandem/error.hpp"

namespace tandem {

UniformizedMDP uniformize(const StateSpace& space, const MarketModel& market,
                          const SystemConfig& config) {
  if (config.stations() != space.stations()) {
    throw DomainError("system config and state space disagree on the number of stations");
  }
  UniformizedMDP mdp;
  mdp.states_ = space.size();
  mdp.actions_ = market.price_count();
  mdp.uniformization_ = market.lambda();
  for (double m : config.mu()) mdp.uniformization_ += m;
  const double big_lambda = mdp.uniformization_;
  const std::size_t stations = space.stations();

  mdp.offsets_.reserve(mdp.states_ * mdp.actions_ + 1);
  mdp.offsets_.push_back(0);
  mdp.entries_.reserve(mdp.states_ * mdp.actions_ * (stations + 2));
  mdp.rewards_.reserve(mdp.states_ * mdp.actions_);

  // Service moves do not depend on the action, so build them once per state.
  std::vector<UniformizedMDP::Entry> services;
  for (std::size_t s = 0; s < mdp.states_; ++s) {
    services.clear();
    double service_rate = 0.0;
    for (std::size_t j = 0; j < stations; ++j) {
      if (space.occupancy(s, j) == 0) continue;
      if (j + 1 < stations) {
        if (space.occupancy(s, j + 1) >= space.capacity(j + 1)) continue;
        services.push_back({s - space.stride(j) + space.stride(j + 1), config.mu(j) / big_lambda});
      } else {
        services.push_back({s - space.stride(j), config.mu(j) / big_lambda});
      }
      service_rate += config.mu(j);
    }
    const bool admits = space.occupancy(s, 0) < space.capacity(0);

    for (std::size_t a = 0; a < mdp.actions_; ++a) {
      const double arrival = admits ? market.potential_rate_at(a) : 0.0;
      if (arrival > 0.0) mdp.entries_.push_back({s + space.stride(0), arrival / big_lambda});
      mdp.entries_.insert(mdp.entries_.end(), services.begin(), services.end());
      const double stay = 1.0 - (arrival + service_rate) / big_lambda;
      if (stay > 0.0) mdp.entries_.push_back({s, stay});
      mdp.offsets_.push_back(mdp.entries_.size());
      mdp.rewards_.push_back(admits ? market.price(a) * arrival / big_lambda : 0.0);
    }
  }
  return mdp;
}

PolicyEvaluation policy_evaluation(const UniformizedMDP& mdp, const PricingPolicy& policy,
                                   std::size_t anchor) {
  const std::size_t n = mdp.states();
  if (policy.size() != n) {
    throw DomainError(fmt::format("policy covers {} states, MDP has {}", policy.size(), n));
  }
  if (anchor >= n) throw DomainError("bias anchor out of range");

  // Unknowns: h(s) for s != anchor, with column `anchor` holding g instead.
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(n * 6);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    const int row = static_cast<int>(s);
    const std::size_t a = policy[s];
    if (a >= mdp.actions()) throw DomainError("policy action outside the price set");
    rhs(row) = mdp.reward(s, a);
    entries.emplace_back(row, static_cast<int>(anchor), 1.0);  // g
    if (s != anchor) entries.emplace_back(row, row, 1.0);
    for (const auto& e : mdp.row(s, a)) {
      if (e.target != anchor) entries.emplace_back(row, static_cast<int>(e.target), -e.probability);
    }
  }
  const auto size = static_cast<Eigen::Index>(n);
  Eigen::SparseMatrix<double> m(size, size);
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) {
    throw NumericalError("policy evaluation system is singular: " + lu.lastErrorMessage());
  }
  Eigen::VectorXd x = lu.solve(rhs);
  Eigen::VectorXd correction = lu.solve(rhs - m * x);
  if (correction.allFinite()) x += correction;
  if (!x.allFinite()) throw NumericalError("policy evaluation produced non-finite values");

  const double residual = (rhs - m * x).lpNorm<Eigen::Infinity>();
  const double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  if (residual > 1e-9 * scale) {
    throw NumericalError(fmt::format("policy evaluation residual {:.3e}", residual), residual);
  }

  PolicyEvaluation out;
  out.gain = x(static_cast<Eigen::Index>(anchor)) * mdp.uniformization_rate();
  out.bias = x;
  out.bias(static_cast<Eigen::Index>(anchor)) = 0.0;
  return out;
}

namespace {

double action_value(const UniformizedMDP& mdp, const Eigen::VectorXd& bias, std::size_t s,
                    std::size_t a) {
  double v = mdp.reward(s, a);
  for (const auto& e : mdp.row(s, a)) v += e.probability * bias(static_cast<Eigen::Index>(e.target));
  return v;
}

}  // namespace

PolicyIterationResult policy_iteration(const UniformizedMDP& mdp,
                                       const PolicyIterationOptions& options) {
  const std::size_t n = mdp.states();
  PricingPolicy policy = [&] {
    if (options.initial_policy) {
      if (options.initial_policy->size() != n) throw DomainError("initial policy has wrong size");
      return *options.initial_policy;
    }
    // State 0 (empty system) always admits, so its reward ranks a * lambda_a.
    std::size_t best = 0;
    for (std::size_t a = 1; a < mdp.actions(); ++a) {
      if (mdp.reward(0, a) > mdp.reward(0, best)) best = a;
    }
    return PricingPolicy::constant(n, best);
  }();

  PolicyIterationResult result{policy, 0.0, {}, 0, {}};
  for (std::size_t iteration = 1; iteration <= options.max_iterations; ++iteration) {
    PolicyEvaluation eval = policy_evaluation(mdp, policy);
    result.gain_history.push_back(eval.gain);

    bool changed = false;
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t incumbent = policy[s];
      double best_value = action_value(mdp, eval.bias, s, incumbent);
      const double threshold = options.improvement_tolerance * std::max(1.0, std::abs(best_value));
      std::size_t best = incumbent;
      for (std::size_t a = 0; a < mdp.actions(); ++a) {
        if (a == incumbent) continue;
        double v = action_value(mdp, eval.bias, s, a);
        if (v > best_value + threshold) {
          best_value = v;
          best = a;
        }
      }
      if (best != incumbent) {
        policy[s] = best;
        changed = true;
      }
    }
    if (!changed) {
      result.policy = std::move(policy);
      result.gain = eval.gain;
      result.bias = std::move(eval.bias);
      result.iterations = iteration;
      return result;
    }
  }
  throw ConvergenceError(
      fmt::format("policy iteration did not converge in {} iterations", options.max_iterations));
}

}  // namespace tandem
