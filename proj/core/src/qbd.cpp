#include "tandem/qbd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <fmt/format.h>

#include "tandem/ctmc.hpp"
#include "tandem/error.hpp"

namespace tandem {

namespace {

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& m, std::size_t n) {
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd base = m;
  while (n > 0) {
    if (n & 1U) result = result * base;
    n >>= 1U;
    if (n > 0) base = base * base;
  }
  return result;
}

void require_stable(double arrival_rate, const HypoService& service) {
  const double load = arrival_rate * service.mean();
  if (!(load < 1.0)) {
    throw InapplicableError(
        fmt::format("matrix-geometric bounds need load < 1, got {:.6g}", load));
  }
}

}  // namespace

HypoService::HypoService(std::vector<double> rates) : rates_(std::move(rates)) {
  if (rates_.empty()) throw ConfigError("hypoexponential service needs at least one phase");
  for (double m : rates_) {
    if (!std::isfinite(m) || m <= 0.0) throw ConfigError("phase rates must be finite and positive");
  }
}

double HypoService::mean() const noexcept {
  double total = 0.0;
  for (double m : rates_) total += 1.0 / m;
  return total;
}

Eigen::MatrixXd HypoService::subgenerator() const {
  const auto j = static_cast<Eigen::Index>(rates_.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(j, j);
  for (Eigen::Index k = 0; k < j; ++k) {
    t(k, k) = -rates_[static_cast<std::size_t>(k)];
    if (k + 1 < j) t(k, k + 1) = rates_[static_cast<std::size_t>(k)];
  }
  return t;
}

QbdBlocks make_blocks(double arrival_rate, const HypoService& service) {
  if (!std::isfinite(arrival_rate) || arrival_rate < 0.0) {
    throw ConfigError("arrival rate must be finite and non-negative");
  }
  const auto j = static_cast<Eigen::Index>(service.phases());
  QbdBlocks b;
  b.arrival_rate = arrival_rate;
  b.up = arrival_rate * Eigen::MatrixXd::Identity(j, j);
  b.local = service.subgenerator() - b.up;
  b.down = Eigen::MatrixXd::Zero(j, j);
  b.down(j - 1, 0) = service.rates().back();
  return b;
}

double operator_norm(const Eigen::MatrixXd& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

double spectral_radius(const Eigen::MatrixXd& m, double tolerance, std::size_t max_iterations) {
  if (m.rows() != m.cols() || m.rows() == 0) throw DomainError("spectral radius needs a square matrix");
  if ((m.array() < 0.0).any()) throw DomainError("power iteration expects a non-negative matrix");
  Eigen::VectorXd x = Eigen::VectorXd::Ones(m.rows());
  for (std::size_t it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd y = m * x;
    const double mass = y.sum();
    if (mass == 0.0) return 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x(i) <= 0.0) continue;
      const double ratio = y(i) / x(i);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    if (hi - lo <= tolerance) return 0.5 * (hi + lo);
    x = y / mass;
  }
  throw ConvergenceError("power iteration for the spectral radius did not converge");
}

RateMatrix compute_rate_matrix(const QbdBlocks& blocks, const RateMatrixOptions& options) {
  const Eigen::Index j = blocks.up.rows();
  const double load_mean = -[&] {
    // Mean service time from the sub-generator: -alpha T^{-1} 1 with alpha = e1.
    Eigen::MatrixXd t = blocks.local + blocks.up;
    return (t.inverse().row(0)).sum();
  }();
  if (!(blocks.arrival_rate * load_mean < 1.0)) {
    throw InapplicableError(fmt::format("rate matrix needs load < 1, got {:.6g}",
                                        blocks.arrival_rate * load_mean));
  }

  RateMatrix out;
  out.r = Eigen::MatrixXd::Zero(j, j);
  if (blocks.arrival_rate == 0.0) return out;

  const Eigen::MatrixXd local_inv = blocks.local.inverse();
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    Eigen::MatrixXd next = -(blocks.up + out.r * out.r * blocks.down) * local_inv;
    const double change = (next - out.r).cwiseAbs().maxCoeff();
    out.r = std::move(next);
    if (change < options.tolerance) {
      out.iterations = it;
      break;
    }
    if (it == options.max_iterations) {
      throw ConvergenceError("rate-matrix fixed point did not converge", change);
    }
  }
  out.r = out.r.cwiseMax(0.0);
  out.residual = (blocks.up + out.r * blocks.local + out.r * out.r * blocks.down)
                     .cwiseAbs()
                     .rowwise()
                     .sum()
                     .maxCoeff();
  out.spectral_radius = spectral_radius(out.r, options.spectral_tolerance);
  return out;
}

Eigen::RowVectorXd InfiniteBufferDistribution::level(std::size_t n) const {
  if (n == 0) throw DomainError("level 0 is the scalar empty-state mass");
  return level1 * matrix_power(r, n - 1);
}

double InfiniteBufferDistribution::level_mass(std::size_t n) const {
  return n == 0 ? empty : level(n).sum();
}

double InfiniteBufferDistribution::tail_mass(std::size_t from) const {
  if (from == 0) return total_mass();
  const auto j = r.rows();
  Eigen::MatrixXd geometric = (Eigen::MatrixXd::Identity(j, j) - r).inverse();
  return (level(from) * geometric).sum();
}

InfiniteBufferDistribution infinite_buffer_distribution(const RateMatrix& rate,
                                                         const QbdBlocks& blocks) {
  if (!(rate.spectral_radius < 1.0)) throw InapplicableError("spectral radius must be < 1");
  const Eigen::Index j = rate.r.rows();
  const Eigen::MatrixXd& r = rate.r;

  // Unknowns x = (eta0, eta1). Level-1 balance per phase plus normalization;
  // the level-0 balance is implied.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(j + 1, j + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(j + 1);
  const Eigen::MatrixXd level1_block = blocks.local + r * blocks.down;
  for (Eigen::Index k = 0; k < j; ++k) {
    m(k, 0) = k == 0 ? blocks.arrival_rate : 0.0;
    for (Eigen::Index i = 0; i < j; ++i) m(k, 1 + i) = level1_block(i, k);
  }
  const Eigen::VectorXd tail =
      (Eigen::MatrixXd::Identity(j, j) - r).inverse() * Eigen::VectorXd::Ones(j);
  m(j, 0) = 1.0;
  for (Eigen::Index i = 0; i < j; ++i) m(j, 1 + i) = tail(i);
  rhs(j) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) throw NumericalError("boundary system of the QBD is singular");
  Eigen::VectorXd x = lu.solve(rhs);

  InfiniteBufferDistribution out;
  out.empty = std::max(0.0, x(0));
  out.level1 = x.tail(j).transpose().cwiseMax(0.0);
  out.r = r;
  const double total = out.total_mass();
  out.empty /= total;
  out.level1 /= total;
  return out;
}

BlockingComparison finite_blocking(double arrival_rate, std::span<const double> mu, int b1) {
  if (b1 < 0) throw ConfigError("buffer size must be non-negative");
  HypoService service({mu.begin(), mu.end()});
  if (!std::isfinite(arrival_rate) || arrival_rate < 0.0) {
    throw ConfigError("arrival rate must be finite and non-negative");
  }
  const std::size_t phases = service.phases();
  const std::size_t capacity = static_cast<std::size_t>(b1) + 1;
  const std::size_t states = 1 + capacity * phases;
  auto index = [phases](std::size_t level, std::size_t phase) {
    return level == 0 ? std::size_t{0} : 1 + (level - 1) * phases + phase;
  };

  std::vector<Eigen::Triplet<double>> transitions;
  transitions.emplace_back(0, static_cast<int>(index(1, 0)), arrival_rate);
  for (std::size_t level = 1; level <= capacity; ++level) {
    for (std::size_t k = 0; k < phases; ++k) {
      const int from = static_cast<int>(index(level, k));
      if (level < capacity) {
        transitions.emplace_back(from, static_cast<int>(index(level + 1, k)), arrival_rate);
      }
      const double rate = service.rates()[k];
      if (k + 1 < phases) {
        transitions.emplace_back(from, static_cast<int>(index(level, k + 1)), rate);
      } else {
        transitions.emplace_back(from, static_cast<int>(index(level - 1, 0)), rate);
      }
    }
  }
  const Generator q = Generator::from_transitions(states, transitions);
  const Eigen::VectorXd eta = stationary_distribution(q);

  BlockingComparison out;
  out.direct = eta.tail(static_cast<Eigen::Index>(phases)).sum();

  if (arrival_rate * service.mean() < 1.0) {
    const QbdBlocks blocks = make_blocks(arrival_rate, service);
    const RateMatrix rate = compute_rate_matrix(blocks);
    const InfiniteBufferDistribution law = infinite_buffer_distribution(rate, blocks);
    const double full = law.level_mass(capacity);
    const double beyond = law.tail_mass(capacity + 1);
    out.formula = full / (1.0 - beyond);
    out.abs_difference = std::abs(*out.formula - out.direct);
  }
  return out;
}

BoundConstants bound_constants(double arrival_rate, std::span<const double> mu,
                               const BoundOptions& options) {
  HypoService service({mu.begin(), mu.end()});
  require_stable(arrival_rate, service);
  const QbdBlocks blocks = make_blocks(arrival_rate, service);
  const RateMatrix rate = compute_rate_matrix(blocks);
  const InfiniteBufferDistribution law = infinite_buffer_distribution(rate, blocks);

  BoundConstants out;
  out.r = rate.r;
  out.spectral_radius = rate.spectral_radius;
  out.p = 0.5 * (rate.spectral_radius + 1.0);
  out.level1_mass = law.level1.sum();

  // ok[n] <=> ||R^n|| <= p^n, compared in log space to survive underflow.
  const std::size_t horizon = options.max_threshold + options.certification_window;
  const double log_p = std::log(out.p);
  std::vector<char> ok(horizon + 1, 1);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(out.r.rows(), out.r.cols());
  for (std::size_t n = 1; n <= horizon; ++n) {
    power = power * out.r;
    const double norm = operator_norm(power);
    if (norm == 0.0) break;  // every later power is zero as well
    ok[n] = std::log(norm) <= static_cast<double>(n) * log_p + 1e-12 ? 1 : 0;
  }

  // Smallest n0 whose certification window is clean.
  std::size_t threshold = 0;
  std::size_t run = 0;
  for (std::size_t n = horizon; n >= 1; --n) {
    run = ok[n] ? run + 1 : 0;
    if (run > options.certification_window && n <= options.max_threshold) threshold = n;
  }
  if (threshold == 0) {
    throw InapplicableError(fmt::format("no threshold N <= {} certifies ||R^n|| <= p^n",
                                        options.max_threshold));
  }

  const double ratio = out.level1_mass / (1.0 - out.p);
  auto denominator = [&](std::size_t n) {
    return 1.0 - std::pow(out.p, static_cast<double>(n + 1)) * ratio;
  };
  while (denominator(threshold) <= 0.0) {
    if (++threshold > options.max_threshold) {
      throw InapplicableError("tail estimate never becomes positive within the threshold cap");
    }
  }
  out.n_threshold = threshold;
  out.c = out.level1_mass / denominator(threshold);

  const double closed_denominator = 1.0 - ratio;
  out.closed_form_valid = closed_denominator > 1e-9;
  out.c_closed_form = out.closed_form_valid ? out.level1_mass / closed_denominator
                                            : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace tandem
