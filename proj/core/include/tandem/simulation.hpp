#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tandem/market.hpp"

namespace tandem {

// Named random streams derived from one master seed.
enum class Stream : std::uint64_t { replication = 0, arrivals = 1, service = 2 };

// splitmix64-derived sub-seed for (master, replication, stream, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication, Stream stream,
                          std::uint64_t index = 0);

/// Common random numbers shared by the coupled systems.
///
/// arrivals[m] is V(m+1), the epoch of the (m+1)-th potential arrival;
/// service[j][n] is U(n+1, j+1). Each family draws from its own mt19937_64
/// stream with an explicit inverse-CDF transform, so a longer draw with the
/// same seed extends a shorter one.
struct RandomPrimitives {
  std::uint64_t seed = 0;
  std::vector<double> arrivals;
  std::vector<std::vector<double>> service;

  std::size_t count() const noexcept { return arrivals.size(); }
};

// A zero potential rate yields +inf arrival epochs.
RandomPrimitives generate_primitives(std::uint64_t seed, std::size_t count, double potential_rate,
                                     std::span<const double> mu);

struct SamplePath {
  std::vector<double> admissions;               // T(n, 0), n = 1..A
  std::vector<std::vector<double>> departures;  // departures[j][n-1] = T(n, j+1)
  std::size_t potential_used = 0;               // potential arrivals consumed
  // Set when the primitives ran out; the path is exact up to `horizon`.
  bool truncated = false;
  double horizon = 0.0;

  // A(t) = max{n : T(n, 0) <= t}.
  std::size_t admitted(double t) const;
  const std::vector<double>& exits() const { return departures.back(); }
};

/// Tandem line with communication blocking driven by `primitives`.
///
/// T(n,0) is the first unused V(m) after max(T(n-1,0), T(n-B1-1,1)); then
/// T(n,j) = max(T(n,j-1), T(n-1,j), T(n-B_{j+1}-1, j+1)) + U(n,j) with
/// T(.,J+1) = 0. Arrivals that would see station 1 full are skipped.
SamplePath tandem_path(const RandomPrimitives& primitives, std::span<const int> buffers);

enum class MhypoRecursion {
  // Queue of capacity B1 + 1: admission after T~(n-B1-1, J), service starts at
  // max(T~(n,0), T~(n-1,J)).
  buffered,
  // Literal form: admission only after T~(n-1, J), so at most one customer is
  // ever present.
  capacity_one,
};

// Single-server queue with hypoexponential service sum_j U(n,j). The returned
// path has one departure column, T~(n, J).
SamplePath mhypo_path(const RandomPrimitives& primitives, int b1,
                      MhypoRecursion recursion = MhypoRecursion::buffered);

struct CouplingViolation {
  double time = 0.0;
  std::size_t tandem_admitted = 0;
  std::size_t mhypo_admitted = 0;
};

struct CouplingReport {
  bool passed = true;
  std::size_t epochs_checked = 0;
  std::optional<CouplingViolation> first_violation;
};

// Checks A(t) >= A~(t) at every admission epoch of either path, up to the
// common horizon of the primitives.
CouplingReport verify_coupling(const RandomPrimitives& primitives, std::span<const int> buffers,
                               MhypoRecursion recursion = MhypoRecursion::buffered);

struct ReplicationRecord {
  std::uint64_t seed = 0;
  double horizon = 0.0;
  std::size_t admitted = 0;        // A(T)
  std::size_t mhypo_admitted = 0;  // A~(T), buffered recursion
  double estimate = 0.0;           // price * A(T) / T
};

struct GainEstimate {
  double estimate = 0.0;
  double half_width = 0.0;  // 1.96 * sample sd / sqrt(replications)
  std::vector<ReplicationRecord> replications;
};

/// Monte-Carlo gain of the static policy at `price`: the mean over
/// replications of price * A(T) / T. Replication r uses seeds derived from
/// (master_seed, r).
GainEstimate estimate_gain(const SystemConfig& config, const MarketModel& market, double price,
                           double horizon, std::size_t replications, std::uint64_t master_seed);

}  // namespace tandem
