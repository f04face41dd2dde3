// tandem-pricer: experiment driver for the tandem-line pricing solvers.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "tandem/config_io.hpp"
#include "tandem/error.hpp"
#include "tandem/experiment.hpp"

namespace {

enum Exit : int { kOk = 0, kViolation = 1, kConfig = 2, kNumerical = 3 };

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path, std::ios::binary);
    if (!file_) throw tandem::ConfigError(fmt::format("cannot open output file {}", path));
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

int sweep(const tandem::ExperimentConfig& config, const std::string& out, bool sensitivity) {
  const auto rows = sensitivity ? tandem::run_sensitivity(config) : tandem::run_sweep_b1(config);
  Output sink(out);
  tandem::write_sweep_csv(sink.stream(), rows);
  int code = kOk;
  for (const auto& row : rows) {
    if (!row.error.empty()) {
      std::cerr << fmt::format("row {}={}: {}\n", row.axis, row.value, row.error);
      if (code == kOk) code = kNumerical;
    }
  }
  for (const auto& row : rows) {
    if (row.error.empty() && !row.ordering_ok) {
      std::cerr << fmt::format("row {}={}: ordering chain violated\n", row.axis, row.value);
      code = kViolation;
    }
  }
  return code;
}

int verify(const tandem::ExperimentConfig& config, const std::string& out) {
  const tandem::VerifyReport report = tandem::run_verify(config);
  Output sink(out);
  sink.stream() << tandem::to_json(report);
  for (const auto& check : report.checks) {
    if (!check.passed) std::cerr << fmt::format("FAILED {}: {}\n", check.name, check.detail);
  }
  return report.passed() ? kOk : kViolation;
}

int solve(const tandem::ExperimentConfig& config, const std::string& out,
          const std::string& simulate_out) {
  const tandem::SolveReport report = tandem::run_solve(config);
  {
    Output sink(out);
    tandem::write_static_csv(sink.stream(), report.statics);
  }
  std::cout << tandem::to_json(report, config);
  if (!simulate_out.empty()) {
    const tandem::GainEstimate est = tandem::estimate_gain(
        config.system, config.market, report.upper.price, config.verify.simulation_horizon,
        config.verify.simulation_replications, config.seed);
    Output sink(simulate_out);
    tandem::write_replication_csv(sink.stream(), est.replications);
    std::cerr << fmt::format("simulated gain at a* = {}: {} +/- {}\n", report.upper.price,
                             tandem::format_real(est.estimate), tandem::format_real(est.half_width));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pricing experiments for tandem queues with communication blocking"};
  std::string command;
  std::string config_path;
  std::string out;
  std::string simulate_out;
  std::optional<std::uint64_t> seed;
  bool skip_dynamic = false;

  app.add_option("command", command, "sweep-b1 | sensitivity | verify | solve")
      ->required()
      ->check(CLI::IsMember({"sweep-b1", "sensitivity", "verify", "solve"}));
  app.add_option("--config", config_path, "JSON experiment config")->required();
  app.add_option("--out", out, "output path (CSV, or JSON for verify); '-' or omitted uses the "
                               "config's \"output\" or stdout");
  app.add_option("--seed", seed, "master seed, overrides the config");
  app.add_flag("--skip-dynamic", skip_dynamic, "never run the dynamic (policy iteration) solve");
  app.add_option("--simulate-out", simulate_out,
                 "solve only: also simulate the simple policy and write per-replication CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    tandem::ExperimentConfig config = tandem::load_experiment_config(config_path);
    if (seed) config.seed = *seed;
    if (skip_dynamic) config.skip_dynamic = true;
    if (out.empty()) out = config.output;

    switch (tandem::parse_command(command)) {
      case tandem::Command::sweep_b1: return sweep(config, out, false);
      case tandem::Command::sensitivity: return sweep(config, out, true);
      case tandem::Command::verify: return verify(config, out);
      case tandem::Command::solve: return solve(config, out, simulate_out);
    }
  } catch (const tandem::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const tandem::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const tandem::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
