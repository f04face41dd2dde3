#include "tandem/config_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "tandem/error.hpp"

namespace tandem {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(fmt::format("missing required key \"{}\"", key));
  return *it;
}

double number(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw ConfigError(fmt::format("\"{}\" must be a number", key));
  return v.get<double>();
}

std::vector<double> numbers(const json& v, const char* key) {
  if (!v.is_array()) throw ConfigError(fmt::format("\"{}\" must be an array of numbers", key));
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(fmt::format("\"{}\" must contain only numbers", key));
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<int> integers(const json& v, const char* key) {
  std::vector<int> out;
  for (double x : numbers(v, key)) {
    if (x != std::floor(x) || std::abs(x) > 1e9) {
      throw ConfigError(fmt::format("\"{}\" must contain integers", key));
    }
    out.push_back(static_cast<int>(x));
  }
  return out;
}

std::vector<double> parse_prices(const json& v) {
  if (v.is_array()) return numbers(v, "prices");
  if (!v.is_object()) throw ConfigError("\"prices\" must be an array or a {start, stop, step} object");
  const double start = number(v, "start");
  const double stop = number(v, "stop");
  const double step = number(v, "step");
  if (!(step > 0.0) || !(stop >= start)) throw ConfigError("price range needs step > 0 and stop >= start");
  std::vector<double> out;
  for (long k = 0;; ++k) {
    const double a = start + static_cast<double>(k) * step;
    if (a > stop + 1e-9 * step) break;
    out.push_back(a);
    if (out.size() > 1'000'000) throw ConfigError("price range is too long");
  }
  return out;
}

ReservationDistribution parse_reservation(const json& r) {
  if (!r.is_object()) throw ConfigError("\"reservation\" must be an object");
  const json& kind_node = require(r, "kind");
  if (!kind_node.is_string()) throw ConfigError("reservation \"kind\" must be a string");
  const auto kind = kind_node.get<std::string>();
  if (kind == "exponential") return ReservationDistribution::exponential(number(r, "rate"));
  if (kind == "uniform") return ReservationDistribution::uniform(number(r, "lo"), number(r, "hi"));
  if (kind == "normal") return ReservationDistribution::normal(number(r, "mean"), number(r, "sd"));
  if (kind == "empirical") {
    return ReservationDistribution::empirical(numbers(require(r, "points"), "points"),
                                              numbers(require(r, "weights"), "weights"));
  }
  throw ConfigError(fmt::format("unknown reservation kind \"{}\"", kind));
}

MarketModel market_from(const json& j) {
  return MarketModel(number(j, "lambda"), parse_reservation(require(j, "reservation")),
                     parse_prices(require(j, "prices")));
}

json parse_text(std::string_view text) {
  try {
    json j = json::parse(text.begin(), text.end());
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("invalid JSON: {}", e.what()));
  }
}

}  // namespace

std::string_view to_string(Command command) {
  switch (command) {
    case Command::sweep_b1: return "sweep-b1";
    case Command::sensitivity: return "sensitivity";
    case Command::verify: return "verify";
    case Command::solve: return "solve";
  }
  return "unknown";
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::b1: return "b1";
    case SweepAxis::rho: return "rho";
    case SweepAxis::stations: return "stations";
  }
  return "unknown";
}

Command parse_command(std::string_view name) {
  for (Command c : {Command::sweep_b1, Command::sensitivity, Command::verify, Command::solve}) {
    if (to_string(c) == name) return c;
  }
  throw ConfigError(fmt::format("unknown command \"{}\"", name));
}

SweepAxis parse_axis(std::string_view name) {
  for (SweepAxis a : {SweepAxis::b1, SweepAxis::rho, SweepAxis::stations}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError(fmt::format("unknown sweep axis \"{}\"", name));
}

MarketModel parse_market(std::string_view json_text) { return market_from(parse_text(json_text)); }

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  const json j = parse_text(json_text);
  ExperimentConfig cfg{
      SystemConfig(numbers(require(j, "mu"), "mu"), integers(require(j, "buffers"), "buffers")),
      market_from(j),
  };

  if (auto it = j.find("command"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("\"command\" must be a string");
    cfg.command = parse_command(it->get<std::string>());
  }
  if (auto it = j.find("axis"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("\"axis\" must be a string");
    cfg.axis = parse_axis(it->get<std::string>());
  }
  if (auto it = j.find("grid"); it != j.end()) {
    cfg.grid = numbers(*it, "grid");
    if (cfg.grid.empty()) throw ConfigError("\"grid\" must be nonempty");
  } else {
    switch (cfg.axis) {
      case SweepAxis::b1: cfg.grid = {static_cast<double>(cfg.system.buffer(0))}; break;
      case SweepAxis::rho: cfg.grid = {utilization(cfg.system, cfg.market.lambda())}; break;
      case SweepAxis::stations: cfg.grid = {static_cast<double>(cfg.system.stations())}; break;
    }
  }
  for (std::size_t i = 1; i < cfg.grid.size(); ++i) {
    if (!(cfg.grid[i - 1] < cfg.grid[i])) throw ConfigError("\"grid\" must be strictly increasing");
  }
  for (double x : cfg.grid) {
    if (!std::isfinite(x)) throw ConfigError("\"grid\" values must be finite");
    if (cfg.axis != SweepAxis::rho && (x != std::floor(x) || x < 0.0)) {
      throw ConfigError("b1 and stations grids must hold non-negative integers");
    }
    if (cfg.axis == SweepAxis::stations && x < 1.0) throw ConfigError("stations grid needs J >= 1");
    if (cfg.axis == SweepAxis::rho && !(x > 0.0)) throw ConfigError("rho grid must be positive");
  }

  if (auto it = j.find("output"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("\"output\" must be a string");
    cfg.output = it->get<std::string>();
  }
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned()) throw ConfigError("\"seed\" must be a non-negative integer");
    cfg.seed = it->get<std::uint64_t>();
  }
  if (auto it = j.find("skip_dynamic"); it != j.end()) {
    if (!it->is_boolean()) throw ConfigError("\"skip_dynamic\" must be a boolean");
    cfg.skip_dynamic = it->get<bool>();
  }
  if (j.contains("dynamic_budget")) {
    cfg.dynamic_budget = number(j, "dynamic_budget");
    if (!(cfg.dynamic_budget >= 0.0)) throw ConfigError("\"dynamic_budget\" must be >= 0");
  }
  if (j.contains("rho")) {
    cfg.target_rho = number(j, "rho");
    if (!(*cfg.target_rho > 0.0)) throw ConfigError("\"rho\" must be positive");
  }
  if (auto it = j.find("verify"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("\"verify\" must be an object");
    auto count = [&](const char* key, std::size_t& dst) {
      if (!it->contains(key)) return;
      const json& v = (*it)[key];
      if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) {
        throw ConfigError(fmt::format("verify.{} must be a positive integer", key));
      }
      dst = v.get<std::size_t>();
    };
    count("coupling_paths", cfg.verify.coupling_paths);
    count("coupling_events", cfg.verify.coupling_events);
    count("simulation_replications", cfg.verify.simulation_replications);
    if (it->contains("simulation_horizon")) {
      cfg.verify.simulation_horizon = number(*it, "simulation_horizon");
      if (!(cfg.verify.simulation_horizon > 0.0)) {
        throw ConfigError("verify.simulation_horizon must be positive");
      }
    }
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str());
}

}  // namespace tandem
