#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tandem/market.hpp"

namespace tandem {

enum class Command { sweep_b1, sensitivity, verify, solve };
enum class SweepAxis { b1, rho, stations };

std::string_view to_string(Command command);
std::string_view to_string(SweepAxis axis);
// ConfigError on unknown names.
Command parse_command(std::string_view name);
SweepAxis parse_axis(std::string_view name);

struct VerifySettings {
  std::size_t coupling_paths = 100;
  std::size_t coupling_events = 10'000;
  std::size_t simulation_replications = 30;
  double simulation_horizon = 1e4;
};

/// One experiment: the system and market blocks plus what to run over them.
///
/// JSON layout (keys other than the first five are optional):
///
///     {"lambda": 3.6, "mu": [8, 8], "buffers": [5, 0],
///      "prices": [350, 400, ...] | {"start": 350, "stop": 750, "step": 50},
///      "reservation": {"kind": "normal", "mean": 500, "sd": 50},
///      "command": "sweep-b1", "axis": "b1", "grid": [2, 3, 4],
///      "output": "out.csv", "seed": 1, "skip_dynamic": false,
///      "dynamic_budget": 5e6, "rho": 0.99,
///      "verify": {"coupling_paths": 100, "coupling_events": 10000,
///                 "simulation_replications": 30, "simulation_horizon": 1e4}}
///
/// Reservation kinds: exponential {rate}, uniform {lo, hi}, normal {mean, sd},
/// empirical {points, weights}.
struct ExperimentConfig {
  SystemConfig system;
  MarketModel market;
  std::optional<Command> command{};
  SweepAxis axis = SweepAxis::b1;
  std::vector<double> grid{};  // nonempty, strictly increasing
  std::string output{};
  std::uint64_t seed = 1;
  bool skip_dynamic = false;
  double dynamic_budget = 5e6;      // max |S| * |A| for a dynamic solve
  std::optional<double> target_rho{};  // utilization held fixed on the stations axis
  VerifySettings verify{};
};

// Both throw ConfigError describing the first problem found.
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Builds just the market block ({"lambda", "prices", "reservation"}).
MarketModel parse_market(std::string_view json_text);

}  // namespace tandem
