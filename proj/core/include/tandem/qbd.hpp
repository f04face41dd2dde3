#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tandem {

/// Hypoexponential service: J exponential phases traversed in order 1..J.
class HypoService {
 public:
  explicit HypoService(std::vector<double> rates);

  std::size_t phases() const noexcept { return rates_.size(); }
  std::span<const double> rates() const noexcept { return rates_; }
  double mean() const noexcept;
  // Sub-generator T: T(j,j) = -mu_j, T(j,j+1) = mu_j.
  Eigen::MatrixXd subgenerator() const;

 private:
  std::vector<double> rates_;
};

/// Level-transition blocks of M/Hypo/1 for levels n >= 1, with the phase of
/// the job in service as the inner coordinate.
///   up     (A0): arrivals, phase unchanged
///   local  (A1): phase advances, minus the diagonal outflow
///   down   (A2): completion in phase J, next job starts in phase 1
struct QbdBlocks {
  double arrival_rate = 0.0;
  Eigen::MatrixXd up;
  Eigen::MatrixXd local;
  Eigen::MatrixXd down;
};

QbdBlocks make_blocks(double arrival_rate, const HypoService& service);

struct RateMatrixOptions {
  double tolerance = 1e-14;
  std::size_t max_iterations = 1'000'000;
  double spectral_tolerance = 1e-13;
};

struct RateMatrix {
  Eigen::MatrixXd r;
  double spectral_radius = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;  // ||A0 + R A1 + R^2 A2||_inf
};

// Row-vector convention throughout: level n+1 = level n * R.
//
// Minimal non-negative solution of A0 + R A1 + R^2 A2 = 0 by the fixed point
// R <- -(A0 + R^2 A2) A1^{-1} started at 0. Throws InapplicableError when the
// load is >= 1 and ConvergenceError if the iteration cap is hit.
RateMatrix compute_rate_matrix(const QbdBlocks& blocks, const RateMatrixOptions& options = {});

// Perron root of a non-negative matrix via power iteration, stopping when the
// Collatz-Wielandt bounds agree to `tolerance`.
double spectral_radius(const Eigen::MatrixXd& m, double tolerance = 1e-13,
                       std::size_t max_iterations = 1'000'000);

// Operator norm induced by the 1-norm on row vectors acting as x -> x M, i.e.
// the largest absolute row sum. This is the 1-norm of the transposed
// (column-vector) representation.
double operator_norm(const Eigen::MatrixXd& m);

/// Stationary law of M/Hypo/1/inf: empty-state mass plus the level-1 vector;
/// level n >= 1 is level1 * R^{n-1}.
struct InfiniteBufferDistribution {
  double empty = 0.0;
  Eigen::RowVectorXd level1;
  Eigen::MatrixXd r;

  Eigen::RowVectorXd level(std::size_t n) const;
  double level_mass(std::size_t n) const;
  // sum_{n >= from} ||level(n)||_1, closed through (I - R)^{-1}. from >= 1.
  double tail_mass(std::size_t from) const;
  double total_mass() const { return empty + tail_mass(1); }
};

InfiniteBufferDistribution infinite_buffer_distribution(const RateMatrix& rate,
                                                         const QbdBlocks& blocks);

struct BlockingComparison {
  double direct = 0.0;             // finite-CTMC solve, authoritative
  std::optional<double> formula;   // truncation identity; empty when load >= 1
  std::optional<double> abs_difference;
};

// Blocking probability of M/Hypo/1/B1 (capacity B1 + 1). `direct` solves the
// finite chain with the CTMC core; `formula` is
// ||eta(B1+1)|| / (1 - sum_{n >= B1+2} ||eta(n)||) from the infinite-buffer law.
BlockingComparison finite_blocking(double arrival_rate, std::span<const double> mu, int b1);

struct BoundConstants {
  Eigen::MatrixXd r;
  double spectral_radius = 0.0;
  double p = 0.0;  // (sp + 1) / 2
  double c = 0.0;
  // ||R^n|| <= p^n certified for every n in [n_threshold, n_threshold + window]
  // and c's denominator is positive from n_threshold on.
  std::size_t n_threshold = 0;
  double level1_mass = 0.0;
  // ||eta1|| (1 - ||eta1|| / (1 - p))^{-1}; only meaningful when positive.
  double c_closed_form = 0.0;
  bool closed_form_valid = false;
};

struct BoundOptions {
  std::size_t max_threshold = 10'000;
  std::size_t certification_window = 200;
};

/// Constants (c, p, N) with beta(B1) <= c p^{B1-1} for every B1 >= N.
///
/// c = ||eta1|| / (1 - p^{N+1} ||eta1|| / (1 - p)), the tail estimate taken at
/// B1 = N, and N is raised until that denominator is positive. The
/// N-independent closed form, which drops the p^{N+1} factor, is reported
/// separately; its denominator is non-positive unless ||eta1|| < 1 - p.
/// Throws InapplicableError when the load is >= 1 or no N certifies within
/// max_threshold.
BoundConstants bound_constants(double arrival_rate, std::span<const double> mu,
                               const BoundOptions& options = {});

}  // namespace tandem
