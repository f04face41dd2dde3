#include "tandem/ctmc.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "tandem/error.hpp"

namespace tandem {

double Generator::max_row_sum_error() const {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < rates.outerSize(); ++r) {
    double sum = 0.0;
    for (decltype(rates)::InnerIterator it(rates, r); it; ++it) sum += it.value();
    worst = std::max(worst, std::abs(sum));
  }
  return worst;
}

std::size_t Generator::max_off_diagonals() const {
  std::size_t worst = 0;
  for (Eigen::Index r = 0; r < rates.outerSize(); ++r) {
    std::size_t count = 0;
    for (decltype(rates)::InnerIterator it(rates, r); it; ++it) {
      if (it.col() != r && it.value() != 0.0) ++count;
    }
    worst = std::max(worst, count);
  }
  return worst;
}

double Generator::min_off_diagonal() const {
  double lo = 0.0;
  bool seen = false;
  for (Eigen::Index r = 0; r < rates.outerSize(); ++r) {
    for (decltype(rates)::InnerIterator it(rates, r); it; ++it) {
      if (it.col() == r) continue;
      lo = seen ? std::min(lo, it.value()) : it.value();
      seen = true;
    }
  }
  return lo;
}

Generator Generator::from_transitions(std::size_t states,
                                      const std::vector<Eigen::Triplet<double>>& transitions) {
  std::vector<double> out(states, 0.0);
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(transitions.size() + states);
  for (const auto& t : transitions) {
    if (t.value() == 0.0) continue;
    if (t.row() == t.col()) throw DomainError("generator transition must change state");
    if (t.value() < 0.0) throw DomainError("generator transition rates must be non-negative");
    out[static_cast<std::size_t>(t.row())] += t.value();
    entries.push_back(t);
  }
  for (std::size_t s = 0; s < states; ++s) {
    auto i = static_cast<int>(s);
    entries.emplace_back(i, i, -out[s]);
  }
  Generator q;
  auto n = static_cast<Eigen::Index>(states);
  q.rates.resize(n, n);
  q.rates.setFromTriplets(entries.begin(), entries.end());
  q.rates.makeCompressed();
  return q;
}

Generator build_generator(const StateSpace& space, const PricingPolicy& policy,
                          const MarketModel& market, const SystemConfig& config) {
  if (policy.size() != space.size()) {
    throw DomainError(fmt::format("policy covers {} states, space has {}", policy.size(),
                                  space.size()));
  }
  if (config.stations() != space.stations()) {
    throw DomainError("system config and state space disagree on the number of stations");
  }
  const std::size_t stations = space.stations();
  std::vector<Eigen::Triplet<double>> transitions;
  transitions.reserve(space.size() * (stations + 1));

  for (std::size_t s = 0; s < space.size(); ++s) {
    const int i = static_cast<int>(s);
    if (space.occupancy(s, 0) < space.capacity(0)) {
      double rate = market.potential_rate_at(policy[s]);
      transitions.emplace_back(i, static_cast<int>(s + space.stride(0)), rate);
    }
    for (std::size_t j = 0; j < stations; ++j) {
      if (space.occupancy(s, j) == 0) continue;
      if (j + 1 < stations) {
        if (space.occupancy(s, j + 1) >= space.capacity(j + 1)) continue;  // blocked
        auto target = s - space.stride(j) + space.stride(j + 1);
        transitions.emplace_back(i, static_cast<int>(target), config.mu(j));
      } else {
        transitions.emplace_back(i, static_cast<int>(s - space.stride(j)), config.mu(j));
      }
    }
  }
  return Generator::from_transitions(space.size(), transitions);
}

double stationary_residual(const Generator& q, const Eigen::VectorXd& eta) {
  Eigen::VectorXd r = q.rates.transpose() * eta;
  return r.lpNorm<Eigen::Infinity>();
}

Eigen::VectorXd stationary_distribution(const Generator& q) {
  const auto n = static_cast<Eigen::Index>(q.size());
  if (n == 0) throw DomainError("empty generator");
  if (n == 1) return Eigen::VectorXd::Ones(1);

  // A = Q^T with row 0 replaced by ones.
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(q.rates.nonZeros() + n));
  for (Eigen::Index r = 0; r < q.rates.outerSize(); ++r) {
    for (decltype(q.rates)::InnerIterator it(q.rates, r); it; ++it) {
      if (it.col() == 0) continue;
      entries.emplace_back(static_cast<int>(it.col()), static_cast<int>(r), it.value());
    }
  }
  for (Eigen::Index c = 0; c < n; ++c) entries.emplace_back(0, static_cast<int>(c), 1.0);

  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) {
    throw NumericalError("stationary system is singular: " + lu.lastErrorMessage());
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(0) = 1.0;
  Eigen::VectorXd eta = lu.solve(b);
  if (lu.info() != Eigen::Success || !eta.allFinite()) {
    throw NumericalError("stationary solve failed");
  }
  Eigen::VectorXd correction = lu.solve(b - a * eta);
  if (correction.allFinite()) eta += correction;

  const double most_negative = eta.minCoeff();
  if (most_negative < -kStationaryResidualTolerance) {
    throw NumericalError(
        fmt::format("stationary solve produced a negative probability {:.3e}", most_negative),
        std::abs(most_negative));
  }
  eta = eta.cwiseMax(0.0);
  eta /= eta.sum();

  const double residual = stationary_residual(q, eta);
  if (!(residual <= kStationaryResidualTolerance)) {
    throw NumericalError(fmt::format("stationary residual {:.3e} exceeds tolerance", residual),
                         residual);
  }
  return eta;
}

Eigen::VectorXd rate_reward(const StateSpace& space, const PricingPolicy& policy,
                            const MarketModel& market) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.size()));
  for (std::size_t s = 0; s < space.size(); ++s) {
    if (space.occupancy(s, 0) < space.capacity(0)) {
      const std::size_t a = policy[s];
      r(static_cast<Eigen::Index>(s)) = market.price(a) * market.potential_rate_at(a);
    }
  }
  return r;
}

double gain(const StateSpace& space, const PricingPolicy& policy, const MarketModel& market,
            const Eigen::VectorXd& eta) {
  return rate_reward(space, policy, market).dot(eta);
}

double blocking_probability(const StateSpace& space, const Eigen::VectorXd& eta) {
  const int full = space.capacity(0);
  double beta = 0.0;
  for (std::size_t s = 0; s < space.size(); ++s) {
    if (space.occupancy(s, 0) == full) beta += eta(static_cast<Eigen::Index>(s));
  }
  return std::clamp(beta, 0.0, 1.0);
}

SteadyState solve_steady_state(const StateSpace& space, const PricingPolicy& policy,
                               const MarketModel& market, const SystemConfig& config) {
  const Generator q = build_generator(space, policy, market, config);
  SteadyState out;
  out.eta = stationary_distribution(q);
  out.residual = stationary_residual(q, out.eta);
  out.blocking = blocking_probability(space, out.eta);
  out.gain = gain(space, policy, market, out.eta);
  return out;
}

}  // namespace tandem
