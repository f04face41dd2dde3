#include "tandem/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "tandem/error.hpp"

namespace tandem {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Exponential draw with a fixed inverse-CDF transform; u lies strictly inside
// (0, 1) so every draw is finite and positive.
double exponential_draw(std::mt19937_64& engine, double rate) {
  const double u = (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
  return -std::log(u) / rate;
}

std::vector<double> exponential_stream(std::uint64_t seed, std::size_t count, double rate) {
  std::vector<double> draws(count);
  std::mt19937_64 engine(seed);
  for (auto& d : draws) d = exponential_draw(engine, rate);
  return draws;
}

double at(const std::vector<double>& column, long long n) {
  // T(n, .) with 1-based n; zero for n <= 0.
  return n <= 0 ? 0.0 : column[static_cast<std::size_t>(n - 1)];
}

// Next unused potential arrival strictly after `threshold`, or npos.
std::size_t next_arrival(const std::vector<double>& arrivals, std::size_t from, double threshold) {
  while (from < arrivals.size() && arrivals[from] <= threshold) ++from;
  if (from == arrivals.size() || !std::isfinite(arrivals[from])) return arrivals.size();
  return from;
}

double horizon_of(const RandomPrimitives& p) {
  return p.arrivals.empty() ? 0.0 : p.arrivals.back();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication, Stream stream,
                          std::uint64_t index) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ replication);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return splitmix64(h ^ index);
}

RandomPrimitives generate_primitives(std::uint64_t seed, std::size_t count, double potential_rate,
                                     std::span<const double> mu) {
  if (count == 0) throw ConfigError("primitive count must be at least 1");
  if (!std::isfinite(potential_rate) || potential_rate < 0.0) {
    throw ConfigError("potential arrival rate must be finite and non-negative");
  }
  RandomPrimitives p;
  p.seed = seed;
  if (potential_rate == 0.0) {
    p.arrivals.assign(count, std::numeric_limits<double>::infinity());
  } else {
    p.arrivals = exponential_stream(derive_seed(seed, 0, Stream::arrivals), count, potential_rate);
    double clock = 0.0;
    for (auto& v : p.arrivals) v = clock += v;
  }
  for (std::size_t j = 0; j < mu.size(); ++j) {
    if (!std::isfinite(mu[j]) || mu[j] <= 0.0) throw ConfigError("service rates must be positive");
    p.service.push_back(exponential_stream(derive_seed(seed, 0, Stream::service, j), count, mu[j]));
  }
  return p;
}

std::size_t SamplePath::admitted(double t) const {
  return static_cast<std::size_t>(std::upper_bound(admissions.begin(), admissions.end(), t) -
                                  admissions.begin());
}

SamplePath tandem_path(const RandomPrimitives& primitives, std::span<const int> buffers) {
  const std::size_t stations = buffers.size();
  if (stations == 0) throw ConfigError("tandem path needs at least one station");
  if (primitives.service.size() < stations) {
    throw ConfigError("primitives carry fewer service streams than stations");
  }
  SamplePath path;
  path.departures.assign(stations, {});
  const auto& v = primitives.arrivals;
  const long long b1 = buffers[0];

  std::size_t m = 0;
  for (long long n = 1;; ++n) {
    const double threshold =
        std::max(at(path.admissions, n - 1), at(path.departures[0], n - b1 - 1));
    m = next_arrival(v, m, threshold);
    if (m == v.size()) break;
    path.admissions.push_back(v[m++]);

    const auto idx = static_cast<std::size_t>(n - 1);
    double previous_stage = path.admissions.back();
    for (std::size_t j = 0; j < stations; ++j) {
      double start = std::max(previous_stage, at(path.departures[j], n - 1));
      if (j + 1 < stations) {
        start = std::max(start, at(path.departures[j + 1], n - buffers[j + 1] - 1));
      }
      previous_stage = start + primitives.service[j][idx];
      path.departures[j].push_back(previous_stage);
    }
  }
  path.potential_used = v.size();
  path.truncated = true;
  path.horizon = horizon_of(primitives);
  return path;
}

SamplePath mhypo_path(const RandomPrimitives& primitives, int b1, MhypoRecursion recursion) {
  if (b1 < 0) throw ConfigError("buffer size must be non-negative");
  if (primitives.service.empty()) throw ConfigError("primitives carry no service streams");
  SamplePath path;
  path.departures.assign(1, {});
  auto& exits = path.departures[0];
  const auto& v = primitives.arrivals;

  std::size_t m = 0;
  for (long long n = 1;; ++n) {
    const double threshold =
        recursion == MhypoRecursion::buffered
            ? std::max(at(path.admissions, n - 1), at(exits, n - b1 - 1))
            : at(exits, n - 1);
    m = next_arrival(v, m, threshold);
    if (m == v.size()) break;
    const double arrival = v[m++];
    path.admissions.push_back(arrival);

    double work = 0.0;
    for (const auto& column : primitives.service) work += column[static_cast<std::size_t>(n - 1)];
    const double start = recursion == MhypoRecursion::buffered
                             ? std::max(arrival, at(exits, n - 1))
                             : arrival;
    exits.push_back(start + work);
  }
  path.potential_used = v.size();
  path.truncated = true;
  path.horizon = horizon_of(primitives);
  return path;
}

CouplingReport verify_coupling(const RandomPrimitives& primitives, std::span<const int> buffers,
                               MhypoRecursion recursion) {
  const SamplePath tandem = tandem_path(primitives, buffers);
  const SamplePath mhypo = mhypo_path(primitives, buffers[0], recursion);

  std::vector<double> epochs;
  epochs.reserve(tandem.admissions.size() + mhypo.admissions.size());
  std::merge(tandem.admissions.begin(), tandem.admissions.end(), mhypo.admissions.begin(),
             mhypo.admissions.end(), std::back_inserter(epochs));

  CouplingReport report;
  for (double t : epochs) {
    ++report.epochs_checked;
    const std::size_t a = tandem.admitted(t);
    const std::size_t a_tilde = mhypo.admitted(t);
    if (a < a_tilde) {
      report.passed = false;
      report.first_violation = CouplingViolation{t, a, a_tilde};
      break;
    }
  }
  return report;
}

GainEstimate estimate_gain(const SystemConfig& config, const MarketModel& market, double price,
                           double horizon, std::size_t replications, std::uint64_t master_seed) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive");
  if (replications == 0) throw ConfigError("at least one replication is required");
  const double rate = potential_rate(market, price);

  GainEstimate out;
  out.replications.reserve(replications);
  for (std::size_t r = 0; r < replications; ++r) {
    ReplicationRecord rec;
    rec.seed = derive_seed(master_seed, r, Stream::replication);
    rec.horizon = horizon;
    if (rate > 0.0) {
      const double expected = rate * horizon;
      auto count = static_cast<std::size_t>(expected + 6.0 * std::sqrt(expected) + 16.0);
      RandomPrimitives prim = generate_primitives(rec.seed, count, rate, config.mu());
      while (prim.arrivals.back() <= horizon) {
        count *= 2;
        prim = generate_primitives(rec.seed, count, rate, config.mu());
      }
      rec.admitted = tandem_path(prim, config.buffers()).admitted(horizon);
      rec.mhypo_admitted = mhypo_path(prim, config.buffer(0)).admitted(horizon);
    }
    rec.estimate = price * static_cast<double>(rec.admitted) / horizon;
    out.replications.push_back(rec);
  }

  double mean = 0.0;
  for (const auto& rec : out.replications) mean += rec.estimate;
  mean /= static_cast<double>(replications);
  double ss = 0.0;
  for (const auto& rec : out.replications) ss += (rec.estimate - mean) * (rec.estimate - mean);
  out.estimate = mean;
  if (replications > 1) {
    const double sd = std::sqrt(ss / static_cast<double>(replications - 1));
    out.half_width = 1.96 * sd / std::sqrt(static_cast<double>(replications));
  }
  return out;
}

}  // namespace tandem
