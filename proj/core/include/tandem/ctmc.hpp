#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "tandem/market.hpp"
#include "tandem/state_space.hpp"

namespace tandem {

/// Sparse CTMC generator: off-diagonals are rates, the diagonal is the negated
/// row sum.
struct Generator {
  Eigen::SparseMatrix<double, Eigen::RowMajor> rates;

  std::size_t size() const noexcept { return static_cast<std::size_t>(rates.rows()); }

  // max_s |sum_t Q(s,t)|.
  double max_row_sum_error() const;
  // Largest number of non-zero off-diagonal entries in any row.
  std::size_t max_off_diagonals() const;
  // Smallest off-diagonal entry (0 if every off-diagonal is structurally absent).
  double min_off_diagonal() const;

  // Assembles a generator from (from, to, rate) triplets with from != to; the
  // diagonal is filled in. Zero rates are dropped.
  static Generator from_transitions(std::size_t states,
                                    const std::vector<Eigen::Triplet<double>>& transitions);
};

/// Tandem-line generator under `policy`.
///
/// Arrival s -> s+e1 at rate lambda*(1-F(pi(s)-)) while s1 <= B1; station j
/// moves a job downstream at rate mu_j when s_j >= 1 and station j+1 has room
/// (communication blocking); station J releases at rate mu_J.
Generator build_generator(const StateSpace& space, const PricingPolicy& policy,
                          const MarketModel& market, const SystemConfig& config);

// Tolerances applied to every stationary solve.
inline constexpr double kStationaryResidualTolerance = 1e-10;
inline constexpr double kNormalizationTolerance = 1e-12;

/// Solves eta^T Q = 0, sum(eta) = 1 by replacing the balance equation of
/// state 0 with the normalization row and factorizing with sparse LU.
///
/// The tandem chain is unichain under every policy (the empty state is
/// reachable from everywhere), so the system stays non-singular even when a
/// zero potential rate leaves part of the space transient; those states get
/// probability 0. Throws NumericalError if ||eta^T Q||_inf exceeds
/// kStationaryResidualTolerance after one refinement step.
Eigen::VectorXd stationary_distribution(const Generator& q);

double stationary_residual(const Generator& q, const Eigen::VectorXd& eta);

struct SteadyState {
  Eigen::VectorXd eta;
  double blocking = 0.0;
  double gain = 0.0;
  double residual = 0.0;
};

// Continuized rate reward r_c(s) = pi(s) * lambda_{pi(s)} when s1 <= B1, else 0.
Eigen::VectorXd rate_reward(const StateSpace& space, const PricingPolicy& policy,
                            const MarketModel& market);

// g = sum_s r_c(s) eta(s).
double gain(const StateSpace& space, const PricingPolicy& policy, const MarketModel& market,
            const Eigen::VectorXd& eta);

// beta = sum over states with s1 = B1+1 of eta(s).
double blocking_probability(const StateSpace& space, const Eigen::VectorXd& eta);

SteadyState solve_steady_state(const StateSpace& space, const PricingPolicy& policy,
                               const MarketModel& market, const SystemConfig& config);

}  // namespace tandem
