#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tandem/config_io.hpp"
#include "tandem/ctmc.hpp"
#include "tandem/market.hpp"
#include "tandem/mdp.hpp"
#include "tandem/qbd.hpp"
#include "tandem/simulation.hpp"
#include "tandem/static_pricing.hpp"

namespace tandem {

// Relative slack allowed in every ordering comparison.
inline constexpr double kOrderingSlack = 1e-9;
// log10 of the relative gap is floored here.
inline constexpr double kLog10GapFloor = -16.0;

// a <= b up to kOrderingSlack relative to the larger magnitude.
bool within_slack(double a, double b, double slack = kOrderingSlack);

// log10(max(gap, 1e-16)).
double floored_log10(double gap);

struct SweepRow {
  std::string axis;
  double value = 0.0;
  std::size_t states = 0;
  std::optional<double> true_gain;
  double static_gain = 0.0;
  double static_price = 0.0;
  double simple_price = 0.0;
  double simple_gain = 0.0;
  double upper_bound = 0.0;
  std::optional<double> lower_bound;
  bool lower_bound_valid = false;
  std::optional<double> relative_gap;
  std::optional<double> log10_gap;
  bool dynamic_skipped = false;
  // simple <= static <= true <= M, with the true gain dropped when absent.
  bool ordering_ok = true;
  std::string error;
};

struct RowOptions {
  bool skip_dynamic = false;
  double dynamic_budget = 5e6;
};

// Never throws on solver failure: the message goes to `error`.
SweepRow evaluate_row(std::string axis, double value, const SystemConfig& system,
                      const MarketModel& market, const RowOptions& options);

// System for one point on a sensitivity axis.
//   rho:      service rates scaled uniformly so that lambda * sum(1/mu) = value.
//   stations: first J stations kept, extra stations copy the last rate with
//             B_j = 0; rates are then rescaled to `target_rho` when given.
SystemConfig sensitivity_system(const ExperimentConfig& config, SweepAxis axis, double value);

std::vector<SweepRow> run_sweep_b1(const ExperimentConfig& config);
std::vector<SweepRow> run_sensitivity(const ExperimentConfig& config);

// Fixed-format reals: 17 significant digits.
std::string format_real(double x);

// Comma-separated, header row, LF endings.
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
void write_static_csv(std::ostream& out, const StaticSweepResult& sweep);
void write_replication_csv(std::ostream& out, std::span<const ReplicationRecord> rows);

struct CheckResult {
  std::string name;
  bool passed = true;
  double slack = 0.0;  // measured margin; negative means violated
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const;
};

/// Full invariant suite on the configured system: ordering chain, static gain
/// identity, bound sandwich, blocking bound, coupling on both recursions,
/// tandem-vs-single-queue blocking, simulation consistency and, for J = 1,
/// closed-form M/M/1/K agreement.
VerifyReport run_verify(const ExperimentConfig& config);

struct MatrixGeometricReport {
  double potential_rate = 0.0;
  BoundConstants constants;
  BlockingComparison blocking;  // at the configured B1
  std::vector<std::pair<int, double>> bound_curve;  // (B1, c p^{B1-1}) for B1 >= N
};

MatrixGeometricReport matrix_geometric_report(double potential_rate, const SystemConfig& system,
                                              int curve_max_b1 = 50);

struct SolveReport {
  std::size_t states = 0;
  UpperBoundResult upper;
  StaticSweepResult statics;
  SteadyState simple_steady_state;
  std::optional<PolicyIterationResult> dynamic;
  std::optional<LowerBound> lower_bound;
  std::optional<MatrixGeometricReport> bounds;
  std::optional<double> relative_gap;
};

SolveReport run_solve(const ExperimentConfig& config);

// JSON serializations; the shape of each is documented in README.md.
std::string to_json(const VerifyReport& report);
std::string to_json(const SolveReport& report, const ExperimentConfig& config);
std::string to_json(const MatrixGeometricReport& report);
std::string to_json(const SteadyState& steady);
std::string to_json(const PolicyIterationResult& result, const StateSpace& space,
                    const MarketModel& market);
std::string to_json(const GainEstimate& estimate);

}  // namespace tandem
