#include "tandem/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "json.hpp"
#include "tandem/error.hpp"

namespace tandem {

namespace {

using nlohmann::json;

// Signed margin of a <= b, relative to max(|a|, |b|, 1e-300).
double margin(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return (b - a) / scale;
}

bool dynamic_affordable(const MarketModel& market, const RowOptions& options,
                        std::size_t states) {
  if (options.skip_dynamic) return false;
  return static_cast<double>(states) * static_cast<double>(market.price_count()) <=
         options.dynamic_budget;
}

json optional_number(const std::optional<double>& x) {
  return x ? json(*x) : json(nullptr);
}

json bound_constants_json(const BoundConstants& k) {
  return {{"spectral_radius", k.spectral_radius},
          {"p", k.p},
          {"c", k.c},
          {"N", k.n_threshold},
          {"level1_mass", k.level1_mass},
          {"c_closed_form", k.c_closed_form},
          {"closed_form_valid", k.closed_form_valid}};
}

json lower_bound_json(const LowerBound& lb) {
  json out{{"value", lb.value}, {"valid", lb.valid}};
  if (lb.constants) out["constants"] = bound_constants_json(*lb.constants);
  return out;
}

json matrix_geometric_json(const MatrixGeometricReport& r) {
  json curve = json::array();
  for (const auto& [b1, bound] : r.bound_curve) curve.push_back({{"b1", b1}, {"bound", bound}});
  return {{"potential_rate", r.potential_rate},
          {"sp", r.constants.spectral_radius},
          {"p", r.constants.p},
          {"c", r.constants.c},
          {"N", r.constants.n_threshold},
          {"c_closed_form", r.constants.c_closed_form},
          {"closed_form_valid", r.constants.closed_form_valid},
          {"beta_direct", r.blocking.direct},
          {"beta_formula", optional_number(r.blocking.formula)},
          {"beta_abs_difference", optional_number(r.blocking.abs_difference)},
          {"bound_curve", curve}};
}

json steady_state_json(const SteadyState& s) {
  return {{"eta", std::vector<double>(s.eta.data(), s.eta.data() + s.eta.size())},
          {"blocking", s.blocking},
          {"gain", s.gain},
          {"residual", s.residual}};
}

json policy_json(const PolicyIterationResult& result, const StateSpace& space,
                 const MarketModel& market) {
  json table = json::array();
  for (std::size_t s = 0; s < space.size(); ++s) {
    table.push_back({{"state", space.state(s)}, {"price", market.price(result.policy[s])}});
  }
  return {{"gain", result.gain},
          {"iterations", result.iterations},
          {"gain_history", result.gain_history},
          {"is_static", result.policy.is_static()},
          {"policy", table}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// M/M/1/K blocking with traffic intensity r.
double mm1k_blocking(double r, int k) {
  if (r == 0.0) return 0.0;
  if (std::abs(r - 1.0) < 1e-12) return 1.0 / (k + 1);
  return (1.0 - r) * std::pow(r, k) / (1.0 - std::pow(r, k + 1));
}

class CheckList {
 public:
  void add(std::string name, bool passed, double slack, std::string detail) {
    report_.checks.push_back({std::move(name), passed, slack, std::move(detail)});
  }
  // Runs `body`, turning a library error into a failed check.
  template <class F>
  void guarded(const std::string& name, F&& body) {
    try {
      body();
    } catch (const Error& e) {
      add(name, false, -std::numeric_limits<double>::infinity(), e.what());
    }
  }
  VerifyReport take() { return std::move(report_); }

 private:
  VerifyReport report_;
};

}  // namespace

bool within_slack(double a, double b, double slack) {
  return a <= b + slack * std::max(std::abs(a), std::abs(b)) + 1e-12;
}

double floored_log10(double gap) {
  if (!(gap > 0.0)) return kLog10GapFloor;
  return std::max(kLog10GapFloor, std::log10(gap));
}

SweepRow evaluate_row(std::string axis, double value, const SystemConfig& system,
                      const MarketModel& market, const RowOptions& options) {
  SweepRow row;
  row.axis = std::move(axis);
  row.value = value;
  try {
    const StateSpace space(system.buffers());
    row.states = space.size();
    const UpperBoundResult upper = upper_bound_price(market);
    const StaticSweepResult statics = optimal_static(system, market);
    row.upper_bound = upper.bound;
    row.simple_price = upper.price;
    row.simple_gain = statics.records[upper.index].gain;
    row.static_price = statics.best_price();
    row.static_gain = statics.best_gain();
    try {
      const LowerBound lb = static_gain_lower_bound(upper.price, system, market);
      row.lower_bound = lb.value;
      row.lower_bound_valid = lb.valid;
    } catch (const InapplicableError&) {
    }

    if (dynamic_affordable(market, options, row.states)) {
      const UniformizedMDP mdp = uniformize(space, market, system);
      row.true_gain = policy_iteration(mdp).gain;
      row.relative_gap = relative_gap(*row.true_gain, row.simple_gain);
      if (row.relative_gap) row.log10_gap = floored_log10(*row.relative_gap);
    } else {
      row.dynamic_skipped = true;
    }

    bool ok = within_slack(row.simple_gain, row.static_gain);
    if (row.true_gain) {
      ok = ok && within_slack(row.static_gain, *row.true_gain) &&
           within_slack(*row.true_gain, row.upper_bound);
    } else {
      ok = ok && within_slack(row.static_gain, row.upper_bound);
    }
    if (row.lower_bound && row.lower_bound_valid) {
      ok = ok && within_slack(*row.lower_bound, row.simple_gain);
    }
    row.ordering_ok = ok;
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

SystemConfig sensitivity_system(const ExperimentConfig& config, SweepAxis axis, double value) {
  const SystemConfig& base = config.system;
  const double lambda = config.market.lambda();
  auto rescaled = [lambda](const SystemConfig& sys, double rho) {
    const double factor = utilization(sys, lambda) / rho;
    std::vector<double> mu(sys.mu().begin(), sys.mu().end());
    for (double& m : mu) m *= factor;
    return SystemConfig(std::move(mu), {sys.buffers().begin(), sys.buffers().end()});
  };

  switch (axis) {
    case SweepAxis::b1:
      return base.with_first_buffer(static_cast<int>(value));
    case SweepAxis::rho:
      if (lambda == 0.0) throw ConfigError("the rho axis needs lambda > 0");
      return rescaled(base, value);
    case SweepAxis::stations: {
      const auto stations = static_cast<std::size_t>(value);
      std::vector<double> mu(base.mu().begin(), base.mu().end());
      std::vector<int> buffers(base.buffers().begin(), base.buffers().end());
      mu.resize(stations, base.mu().back());
      buffers.resize(stations, 0);
      SystemConfig sys(std::move(mu), std::move(buffers));
      if (config.target_rho && lambda > 0.0) return rescaled(sys, *config.target_rho);
      return sys;
    }
  }
  throw ConfigError("unknown sweep axis");
}

std::vector<SweepRow> run_sweep_b1(const ExperimentConfig& config) {
  if (config.axis != SweepAxis::b1) {
    throw ConfigError(fmt::format("sweep-b1 needs axis \"b1\", config has \"{}\"",
                                  to_string(config.axis)));
  }
  const RowOptions options{config.skip_dynamic, config.dynamic_budget};
  std::vector<SweepRow> rows;
  rows.reserve(config.grid.size());
  for (double b : config.grid) {
    rows.push_back(evaluate_row("b1", b, config.system.with_first_buffer(static_cast<int>(b)),
                                config.market, options));
  }
  return rows;
}

std::vector<SweepRow> run_sensitivity(const ExperimentConfig& config) {
  const RowOptions options{config.skip_dynamic, config.dynamic_budget};
  const std::string axis(to_string(config.axis));
  std::vector<SweepRow> rows;
  rows.reserve(config.grid.size());
  for (double v : config.grid) {
    rows.push_back(
        evaluate_row(axis, v, sensitivity_system(config, config.axis, v), config.market, options));
  }
  return rows;
}

std::string format_real(double x) { return fmt::format("{:.17g}", x); }

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  auto opt = [](const std::optional<double>& x) { return x ? format_real(*x) : std::string(); };
  out << "axis,value,true_gain,static_gain,static_price,simple_price,simple_gain,upper_bound,"
         "static_gain_lower_bound,relative_gap,log10_relative_gap,ordering_ok,error\n";
  for (const SweepRow& r : rows) {
    std::string error = r.error;
    std::replace(error.begin(), error.end(), '"', '\'');
    if (error.empty() && r.dynamic_skipped) error = "dynamic solve skipped";
    const bool failed = !r.error.empty();
    out << r.axis << ',' << format_real(r.value) << ',' << opt(r.true_gain) << ','
        << (failed ? "" : format_real(r.static_gain)) << ','
        << (failed ? "" : format_real(r.static_price)) << ','
        << (failed ? "" : format_real(r.simple_price)) << ','
        << (failed ? "" : format_real(r.simple_gain)) << ','
        << (failed ? "" : format_real(r.upper_bound)) << ','
        << (r.lower_bound && r.lower_bound_valid ? format_real(*r.lower_bound) : "") << ','
        << opt(r.relative_gap) << ',' << opt(r.log10_gap) << ','
        << (r.ordering_ok ? "true" : "false") << ','
        << (error.empty() ? "" : "\"" + error + "\"") << '\n';
  }
}

void write_static_csv(std::ostream& out, const StaticSweepResult& sweep) {
  out << "price,potential_rate,blocking,gain\n";
  for (const StaticRecord& r : sweep.records) {
    out << format_real(r.price) << ',' << format_real(r.potential_rate) << ','
        << format_real(r.blocking) << ',' << format_real(r.gain) << '\n';
  }
}

void write_replication_csv(std::ostream& out, std::span<const ReplicationRecord> rows) {
  out << "seed,T,A(T),Ã(T),estimate\n";
  for (const ReplicationRecord& r : rows) {
    out << r.seed << ',' << format_real(r.horizon) << ',' << r.admitted << ',' << r.mhypo_admitted
        << ',' << format_real(r.estimate) << '\n';
  }
}

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

MatrixGeometricReport matrix_geometric_report(double potential_rate, const SystemConfig& system,
                                              int curve_max_b1) {
  MatrixGeometricReport out;
  out.potential_rate = potential_rate;
  out.constants = bound_constants(potential_rate, system.mu());
  out.blocking = finite_blocking(potential_rate, system.mu(), system.buffer(0));
  const int first = static_cast<int>(out.constants.n_threshold);
  for (int b = first; b <= std::max(curve_max_b1, first); ++b) {
    out.bound_curve.emplace_back(b, out.constants.c * std::pow(out.constants.p, b - 1));
  }
  return out;
}

VerifyReport run_verify(const ExperimentConfig& config) {
  const SystemConfig& system = config.system;
  const MarketModel& market = config.market;
  const int b1 = system.buffer(0);
  CheckList checks;

  const UpperBoundResult upper = upper_bound_price(market);
  const double a_star = upper.price;
  const double rate = market.potential_rate_at(upper.index);
  const double load = rate * system.mean_service();

  std::optional<StaticSweepResult> statics;
  checks.guarded("ordering_chain", [&] {
    const SweepRow row = evaluate_row("b1", b1, system, market,
                                      {config.skip_dynamic, config.dynamic_budget});
    if (!row.error.empty()) throw NumericalError(row.error);
    double slack = std::min(margin(row.simple_gain, row.static_gain),
                            margin(row.static_gain, row.true_gain.value_or(row.static_gain)));
    slack = std::min(slack, margin(row.true_gain.value_or(row.static_gain), row.upper_bound));
    std::string detail = fmt::format("simple {} <= static {} <= true {} <= M {}",
                                     format_real(row.simple_gain), format_real(row.static_gain),
                                     row.true_gain ? format_real(*row.true_gain) : "skipped",
                                     format_real(row.upper_bound));
    checks.add("ordering_chain", row.ordering_ok, slack, std::move(detail));
  });

  checks.guarded("static_identity", [&] {
    const StateSpace space(system.buffers());
    double worst = 0.0;
    for (std::size_t a = 0; a < market.price_count(); ++a) {
      const SteadyState s =
          solve_steady_state(space, PricingPolicy::constant(space.size(), a), market, system);
      const double identity = market.price(a) * market.potential_rate_at(a) * (1.0 - s.blocking);
      worst = std::max(worst, std::abs(s.gain - identity) / std::max(1.0, std::abs(identity)));
    }
    checks.add("static_identity", worst <= 1e-9, 1e-9 - worst,
               fmt::format("max relative |g - a lambda_a (1 - beta)| = {:.3e}", worst));
  });

  checks.guarded("stationary_residual", [&] {
    const StateSpace space(system.buffers());
    const SteadyState s = solve_steady_state(
        space, PricingPolicy::constant(space.size(), upper.index), market, system);
    checks.add("stationary_residual", s.residual <= kStationaryResidualTolerance,
               kStationaryResidualTolerance - s.residual,
               fmt::format("||eta Q||_inf = {:.3e} at a* = {}", s.residual, a_star));
  });

  checks.guarded("bound_sandwich", [&] {
    statics = optimal_static(system, market);
    const double simple = statics->records[upper.index].gain;
    if (load >= 1.0) {
      checks.add("bound_sandwich", within_slack(simple, upper.bound), margin(simple, upper.bound),
                 fmt::format("lower bound inapplicable at load {:.6g}; simple {} <= M {}", load,
                             format_real(simple), format_real(upper.bound)));
      return;
    }
    const LowerBound lb = static_gain_lower_bound(a_star, system, market);
    const double lower = lb.valid ? lb.value : 0.0;
    const bool ok = within_slack(lower, simple) && within_slack(simple, upper.bound);
    const double slack = std::min(margin(lower, simple), margin(simple, upper.bound));
    checks.add("bound_sandwich", ok, slack,
               fmt::format("lower {}{} <= simple {} <= M {}", format_real(lb.value),
                           lb.valid ? "" : " (B1 < N, not yet valid)", format_real(simple),
                           format_real(upper.bound)));
  });

  std::optional<BlockingComparison> single_queue;
  if (rate == 0.0) {
    checks.add("blocking_bound", true, 0.0, "potential rate is 0");
  } else if (load >= 1.0) {
    checks.add("blocking_bound", true, 0.0, fmt::format("inapplicable at load {:.6g}", load));
  } else {
    checks.guarded("blocking_bound", [&] {
      const MatrixGeometricReport mg = matrix_geometric_report(rate, system, b1);
      single_queue = mg.blocking;
      checks.add("blocking_formula", true, mg.blocking.abs_difference.value_or(0.0),
                 fmt::format("informational: direct {} vs truncation formula {}",
                             format_real(mg.blocking.direct),
                             mg.blocking.formula ? format_real(*mg.blocking.formula) : "n/a"));
      const auto n = static_cast<int>(mg.constants.n_threshold);
      if (b1 < n) {
        checks.add("blocking_bound", true, 0.0,
                   fmt::format("B1 = {} < N = {}; bound not yet valid", b1, n));
        return;
      }
      const double bound = mg.constants.c * std::pow(mg.constants.p, b1 - 1);
      checks.add("blocking_bound", mg.blocking.direct <= bound, bound - mg.blocking.direct,
                 fmt::format("beta_direct {} <= c p^(B1-1) = {} (c = {}, p = {}, N = {})",
                             format_real(mg.blocking.direct), format_real(bound),
                             format_real(mg.constants.c), format_real(mg.constants.p), n));
    });
  }

  checks.guarded("tandem_vs_single_queue", [&] {
    if (!single_queue) single_queue = finite_blocking(rate, system.mu(), b1);
    const StateSpace space(system.buffers());
    const SteadyState s = solve_steady_state(
        space, PricingPolicy::constant(space.size(), upper.index), market, system);
    checks.add("tandem_vs_single_queue", within_slack(s.blocking, single_queue->direct),
               single_queue->direct - s.blocking,
               fmt::format("beta_tandem {} <= beta_single {}", format_real(s.blocking),
                           format_real(single_queue->direct)));
  });

  for (MhypoRecursion variant : {MhypoRecursion::buffered, MhypoRecursion::capacity_one}) {
    const std::string name = variant == MhypoRecursion::buffered ? "coupling_buffered"
                                                                 : "coupling_capacity_one";
    checks.guarded(name, [&] {
      std::size_t violations = 0;
      std::size_t epochs = 0;
      std::string first;
      for (std::size_t path = 0; path < config.verify.coupling_paths; ++path) {
        const auto seed = derive_seed(config.seed, path, Stream::replication);
        const RandomPrimitives prims =
            generate_primitives(seed, config.verify.coupling_events, rate, system.mu());
        const CouplingReport rep = verify_coupling(prims, system.buffers(), variant);
        epochs += rep.epochs_checked;
        if (!rep.passed) {
          if (violations++ == 0) {
            first = fmt::format("; first at t = {} on path {} (A = {}, A~ = {})",
                                rep.first_violation->time, path,
                                rep.first_violation->tandem_admitted,
                                rep.first_violation->mhypo_admitted);
          }
        }
      }
      checks.add(name, violations == 0, violations == 0 ? 0.0 : -static_cast<double>(violations),
                 fmt::format("{} paths, {} epochs, {} violating paths{}",
                             config.verify.coupling_paths, epochs, violations, first));
    });
  }

  checks.guarded("simulation_bracket", [&] {
    const GainEstimate est =
        estimate_gain(system, market, a_star, config.verify.simulation_horizon,
                      config.verify.simulation_replications, config.seed);
    const StateSpace space(system.buffers());
    const double analytic =
        solve_steady_state(space, PricingPolicy::constant(space.size(), upper.index), market,
                           system)
            .gain;
    const double distance = std::abs(est.estimate - analytic);
    const double allowed = 3.0 * est.half_width;
    const bool ok = est.half_width > 0.0 ? distance <= allowed : distance <= 1e-12;
    checks.add("simulation_bracket", ok, allowed - distance,
               fmt::format("estimate {} +/- {} vs analytic {}", format_real(est.estimate),
                           format_real(est.half_width), format_real(analytic)));
  });

  if (system.stations() == 1) {
    checks.guarded("closed_form_mm1k", [&] {
      if (!statics) statics = optimal_static(system, market);
      double worst_blocking = 0.0;
      double worst_gain = 0.0;
      for (const StaticRecord& r : statics->records) {
        const double beta = mm1k_blocking(r.potential_rate / system.mu(0), b1 + 1);
        const double g = r.price * r.potential_rate * (1.0 - beta);
        worst_blocking = std::max(worst_blocking, std::abs(beta - r.blocking));
        worst_gain = std::max(worst_gain, std::abs(g - r.gain) / std::max(1.0, std::abs(g)));
      }
      const double worst = std::max(worst_blocking, worst_gain);
      checks.add("closed_form_mm1k", worst <= 1e-12, 1e-12 - worst,
                 fmt::format("max |beta - beta_MM1K| = {:.3e}, max relative gain error = {:.3e}",
                             worst_blocking, worst_gain));
    });
  }

  return checks.take();
}

SolveReport run_solve(const ExperimentConfig& config) {
  const SystemConfig& system = config.system;
  const MarketModel& market = config.market;
  const StateSpace space(system.buffers());

  SolveReport out;
  out.states = space.size();
  out.upper = upper_bound_price(market);
  out.statics = optimal_static(system, market);
  out.simple_steady_state = solve_steady_state(
      space, PricingPolicy::constant(space.size(), out.upper.index), market, system);

  if (dynamic_affordable(market, {config.skip_dynamic, config.dynamic_budget}, out.states)) {
    out.dynamic = policy_iteration(uniformize(space, market, system));
    out.relative_gap = relative_gap(out.dynamic->gain, out.statics.records[out.upper.index].gain);
  }
  const double rate = market.potential_rate_at(out.upper.index);
  if (rate * system.mean_service() < 1.0) {
    out.lower_bound = static_gain_lower_bound(out.upper.price, system, market);
    if (rate > 0.0) out.bounds = matrix_geometric_report(rate, system);
  }
  return out;
}

std::string to_json(const VerifyReport& report) {
  json checks = json::array();
  for (const CheckResult& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"slack", std::isfinite(c.slack) ? json(c.slack) : json(nullptr)},
                      {"detail", c.detail}});
  }
  return dump({{"passed", report.passed()}, {"checks", checks}});
}

std::string to_json(const SolveReport& report, const ExperimentConfig& config) {
  const StateSpace space(config.system.buffers());
  json statics = json::array();
  for (const StaticRecord& r : report.statics.records) {
    statics.push_back({{"price", r.price},
                       {"potential_rate", r.potential_rate},
                       {"blocking", r.blocking},
                       {"gain", r.gain}});
  }
  json out{{"states", report.states},
           {"upper_bound", {{"price", report.upper.price}, {"bound", report.upper.bound}}},
           {"simple", {{"price", report.upper.price},
                       {"gain", report.statics.records[report.upper.index].gain},
                       {"steady_state", steady_state_json(report.simple_steady_state)}}},
           {"static", {{"price", report.statics.best_price()},
                       {"gain", report.statics.best_gain()},
                       {"records", statics}}},
           {"dynamic", report.dynamic ? policy_json(*report.dynamic, space, config.market)
                                      : json(nullptr)},
           {"relative_gap", optional_number(report.relative_gap)},
           {"lower_bound", report.lower_bound ? lower_bound_json(*report.lower_bound)
                                              : json(nullptr)},
           {"bounds", report.bounds ? matrix_geometric_json(*report.bounds) : json(nullptr)}};
  return dump(out);
}

std::string to_json(const MatrixGeometricReport& report) {
  return dump(matrix_geometric_json(report));
}

std::string to_json(const SteadyState& steady) { return dump(steady_state_json(steady)); }

std::string to_json(const PolicyIterationResult& result, const StateSpace& space,
                    const MarketModel& market) {
  return dump(policy_json(result, space, market));
}

std::string to_json(const GainEstimate& estimate) {
  json reps = json::array();
  for (const ReplicationRecord& r : estimate.replications) {
    reps.push_back({{"seed", r.seed},
                    {"T", r.horizon},
                    {"admitted", r.admitted},
                    {"mhypo_admitted", r.mhypo_admitted},
                    {"estimate", r.estimate}});
  }
  return dump({{"estimate", estimate.estimate},
               {"half_width", estimate.half_width},
               {"replications", reps}});
}

}  // namespace tandem
