#include "telestab/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

#include "telestab/discretize.hpp"
#include "telestab/errors.hpp"
#include "telestab/io.hpp"
#include "telestab/metrics.hpp"

namespace telestab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string out_path(const ExperimentConfig& cfg, const std::string& file) {
  return (fs::path(cfg.output.dir) / file).string();
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

const char* convention_name(SignConvention c) {
  return c == SignConvention::kDerived ? "derived" : "literal";
}

MaspOptions masp_options(const ExperimentConfig& cfg, double alpha,
                         SignConvention convention) {
  MaspOptions o;
  o.alpha = alpha;
  o.convention = convention;
  o.g_structure = cfg.analysis.g_structure;
  o.monotonicity_check = cfg.analysis.monotonicity_check;
  o.solver.tol = cfg.analysis.lmi_tol;
  return o;
}

json masp_json(const MaspResult& r) {
  json j;
  j["gamma_star"] = r.gamma_star ? json(*r.gamma_star) : json(nullptr);
  j["alpha"] = r.alpha;
  j["tolerance"] = r.tolerance;
  j["bracket_final"] = {r.lower, r.upper};
  j["steps"] = r.steps;
  j["monotone"] = r.monotone;
  json trace = json::array();
  for (const auto& s : r.history)
    trace.push_back({{"gamma", s.gamma}, {"status", sdp::to_string(s.status)}});
  j["trace"] = trace;
  json grid = json::array();
  for (const auto& s : r.grid)
    grid.push_back({{"gamma", s.gamma}, {"status", sdp::to_string(s.status)}});
  j["grid"] = grid;
  j["lower_margin"] = r.at_lower.result.margin;
  j["upper_status"] = sdp::to_string(r.at_upper.result.status);
  j["upper_dual_bound"] = number_or_null(r.at_upper.result.dual_bound);
  return j;
}

}  // namespace

json cmd_masp(const ExperimentConfig& cfg, const std::vector<double>& alphas_in) {
  cfg.validate();
  const std::vector<double> alphas =
      alphas_in.empty() ? std::vector<double>{cfg.analysis.alpha} : alphas_in;
  for (double a : alphas)
    if (!(a > 0)) throw ArgumentError("alpha must be > 0");
  const SignConvention primary = cfg.analysis.convention;
  const SignConvention other = primary == SignConvention::kDerived
                                   ? SignConvention::kLiteral
                                   : SignConvention::kDerived;
  const auto& a = cfg.analysis;
  RunManifest manifest("masp", config_hash(cfg), cfg.sim.seed);

  json rows = json::array();
  std::string table = "alpha,convention,gamma_star,steps,monotone\n";
  std::string trace = "alpha,convention,gamma,status\n";
  std::size_t table_rows = 0, trace_rows = 0;
  auto record = [&](double alpha, SignConvention conv, const MaspResult& r) {
    table += format_number(alpha) + ',' + convention_name(conv) + ',' +
             (r.gamma_star ? format_number(*r.gamma_star) : std::string("nan")) +
             ',' + std::to_string(r.steps) + ',' + (r.monotone ? "1" : "0") + '\n';
    ++table_rows;
    for (const auto& s : r.history) {
      trace += format_number(alpha) + ',' + convention_name(conv) + ',' +
               format_number(s.gamma) + ',' + sdp::to_string(s.status) + '\n';
      ++trace_rows;
    }
  };

  std::optional<double> previous;
  bool alpha_monotone = true;
  for (double alpha : alphas) {
    spdlog::info("masp: alpha={} bracket=[{}, {}] tol={}", alpha, a.bracket_lo,
                 a.bracket_hi, a.tolerance);
    MaspResult r = compute_masp(cfg.sim.params, cfg.sim.gains, a.bracket_lo,
                                a.bracket_hi, a.tolerance,
                                masp_options(cfg, alpha, primary));
    record(alpha, primary, r);
    json row = masp_json(r);
    row["convention"] = convention_name(primary);
    if (r.at_lower.certificate) {
      Theorem1Problem p{cfg.sim.params, cfg.sim.gains};
      p.alpha = alpha;
      p.gamma = r.at_lower.certificate->gamma;
      p.convention = primary;
      p.g_structure = a.g_structure;
      const auto lmi = assemble_theorem1(p);
      json margins = json::array();
      for (const auto& m : sdp::verify_certificate(lmi.system, r.at_lower.result.assignment))
        margins.push_back({{"constraint", m.name}, {"eigenvalue", m.eigenvalue},
                           {"slack", m.slack}});
      row["certificate_margins"] = margins;
    }
    try {
      MaspResult o = compute_masp(cfg.sim.params, cfg.sim.gains, a.bracket_lo,
                                  a.bracket_hi, a.tolerance,
                                  masp_options(cfg, alpha, other));
      record(alpha, other, o);
      json oj = masp_json(o);
      oj["convention"] = convention_name(other);
      row["comparison"] = oj;
    } catch (const BracketError& e) {
      row["comparison"] = {{"convention", convention_name(other)}, {"error", e.what()}};
    }
    if (r.gamma_star) {
      if (previous && *r.gamma_star > *previous + a.tolerance) alpha_monotone = false;
      previous = r.gamma_star;
    }
    rows.push_back(row);
  }

  write_file_atomic(out_path(cfg, "masp.csv"), table);
  manifest.add("masp.csv", table_rows);
  write_file_atomic(out_path(cfg, "masp_trace.csv"), trace);
  manifest.add("masp_trace.csv", trace_rows);
  json report = {{"command", "masp"}, {"results", rows},
                 {"alpha_sorted", std::is_sorted(alphas.begin(), alphas.end())},
                 {"gamma_nonincreasing_in_alpha", alpha_monotone}};
  write_file_atomic(out_path(cfg, "masp_report.json"), report.dump(2) + "\n");
  manifest.add("masp_report.json");
  manifest.write(cfg.output.dir);
  return report;
}

json cmd_simulate(const ExperimentConfig& cfg, bool plot) {
  cfg.validate();
  spdlog::info("simulate: duration={} step={} seed={}", cfg.sim.duration,
               cfg.sim.step, cfg.sim.seed);
  const TrajectoryLog log = run_continuous(cfg.sim);
  const StabilityVerdict v = stability_verdict(log);
  RunManifest manifest("simulate", config_hash(cfg), cfg.sim.seed);

  write_file_atomic(out_path(cfg, "trajectory.csv"), trajectory_csv(log));
  manifest.add("trajectory.csv", log.dense.size());
  write_file_atomic(out_path(cfg, "events.csv"), events_csv(log));
  manifest.add("events.csv", log.events.size());

  json report = {{"command", "simulate"},
                 {"verdict", v.bounded ? "bounded" : "divergent"},
                 {"evidence", v.evidence},
                 {"max_abs_q", v.max_abs_q},
                 {"threshold", v.threshold},
                 {"max_network_delay", log.max_network_delay},
                 {"dense_rows", log.dense.size()},
                 {"events", log.events.size()}};
  if (!v.bounded) report["blowup_time"] = v.blowup_time;
  if (!log.events.empty()) {
    double h_min = log.events.front().h_k;
    std::size_t dropped = 0;
    for (const auto& e : log.events) {
      h_min = std::min(h_min, e.h_k);
      dropped += e.dropped;
    }
    report["min_period"] = h_min;
    report["dropped_packets"] = dropped;
  }
  if (v.bounded) {
    const TransparencyReport t = tracking_error(log);
    report["tracking"] = {{"max_abs", t.position.max_abs},
                          {"rms_final_third", t.position.rms_final_third},
                          {"final", t.position.final_value}};
    report["force"] = {{"max_abs", t.force.max_abs}, {"rms", t.force.rms},
                       {"contact_samples", t.force.contact_samples}};
  }
  if (plot) {
    write_file_atomic(out_path(cfg, "trajectory.svg"),
                      trajectory_svg(log, std::string("master/slave positions (") +
                                              (v.bounded ? "bounded" : "divergent") + ")"));
    manifest.add("trajectory.svg");
  }
  write_file_atomic(out_path(cfg, "simulate_report.json"), report.dump(2) + "\n");
  manifest.add("simulate_report.json");
  manifest.write(cfg.output.dir);
  return report;
}

json cmd_stochastic(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& periods = cfg.sim.sampling.periods;
  const double h_max = *std::max_element(periods.begin(), periods.end());
  const MarkovChain& chain = cfg.sim.dropout.chain;
  const ContinuousModel cm = continuous_matrices(cfg.sim.params);
  const ExponentialTables tables(cm.A, cm.B, periods, h_max,
                                 std::max(1, chain.size() - 1));
  const StochasticSetup setup = build_stochastic_setup(
      chain, tables, cfg.sim.sampling.weights(), cfg.sim.gains);
  spdlog::info("stochastic: {} chain states, {} periods", chain.size(), periods.size());

  sdp::SolverOptions opts;
  opts.tol = cfg.analysis.lmi_tol;
  const StochasticCheck check = check_stochastic(setup, cfg.stochastic.gain_mode, opts);

  const Eigen::VectorXd z0 = Eigen::Map<const Eigen::VectorXd>(
      cfg.stochastic.z0.data(), cfg.stochastic.z0.size());
  MonteCarloConfig mc;
  mc.periods = periods;
  mc.probabilities = cfg.sim.sampling.weights();
  mc.chain = chain;
  mc.gains = cfg.sim.gains;
  mc.params = cfg.sim.params;
  mc.z0 = z0;
  mc.duration = cfg.sim.duration;
  mc.seed = cfg.sim.seed;
  const MonteCarloResult ens = monte_carlo(mc, cfg.stochastic.runs);

  json report = {{"command", "stochastic"},
                 {"solver_status", sdp::to_string(check.result.status)},
                 {"solver_margin", check.result.margin},
                 {"dual_bound", number_or_null(check.result.dual_bound)},
                 {"monte_carlo",
                  {{"runs", ens.runs},
                   {"mean", number_or_null(ens.mean)},
                   {"half_width", number_or_null(ens.half_width)}}}};
  bool certified = false;
  if (check.certificate) {
    const auto& c = *check.certificate;
    certified = c.verified;
    report["omega_max_eigenvalue"] = c.omega_max;
    report["slack_check_min_eigenvalue"] = c.slack_min;
    report["rank_margin"] = c.rank_margin;
    report["full_rank"] = c.rank_margin >= 1e-9;
    json xs = json::array();
    for (const auto& x : c.X) xs.push_back(matrix_json(x));
    report["X"] = xs;
    report["G"] = matrix_json(c.G);
    if (c.verified) {
      const Definition1Bound q = definition1_bound(c);
      const double bound = q.q * z0.squaredNorm();
      report["Q_scale"] = q.q;
      report["Q_scale_literal"] = q.q_literal;
      report["bound"] = bound;
      report["bound_literal"] = q.q_literal * z0.squaredNorm();
      report["consistency"] =
          std::isfinite(ens.mean) && ens.mean + ens.half_width < bound ? "PASS" : "FAIL";
    }
  }
  report["status"] = certified ? "certified" : "not certified";
  if (!certified) report["consistency"] = "n/a";

  RunManifest manifest("stochastic", config_hash(cfg), cfg.sim.seed);
  std::string csv = "run,sum\n";
  for (std::size_t k = 0; k < ens.sums.size(); ++k)
    csv += std::to_string(k) + ',' + format_number(ens.sums[k]) + '\n';
  write_file_atomic(out_path(cfg, "montecarlo.csv"), csv);
  manifest.add("montecarlo.csv", ens.sums.size());
  write_file_atomic(out_path(cfg, "stochastic_report.json"), report.dump(2) + "\n");
  manifest.add("stochastic_report.json");
  manifest.write(cfg.output.dir);
  return report;
}

json cmd_discretize(const ExperimentConfig& cfg, double h) {
  if (!(h > 0) || !std::isfinite(h)) throw ArgumentError("h must be > 0");
  const ContinuousModel cm = continuous_matrices(cfg.sim.params);
  const DiscreteModel d = zoh_discretize(cm.A, cm.B, h);
  json report = {{"command", "discretize"},
                 {"h", h},
                 {"Ad", matrix_json(d.Ad)},
                 {"Bd", matrix_json(d.Bd)}};
  RunManifest manifest("discretize", config_hash(cfg), cfg.sim.seed);
  write_file_atomic(out_path(cfg, "discretize.json"), report.dump(2) + "\n");
  manifest.add("discretize.json");
  manifest.write(cfg.output.dir);
  return report;
}

json cmd_sweep(const ExperimentConfig& cfg, bool plot) {
  cfg.validate();
  RunManifest manifest("sweep", config_hash(cfg), cfg.sim.seed);
  std::string csv = "value,verdict,blowup_time,max_abs_q,rms_error,theorem1\n";
  json rows = json::array();
  for (double value : cfg.sweep.values) {
    if (!(value > 0)) throw ArgumentError("sweep values must be > 0");
    SimConfig sim = cfg.sim;
    std::string certified = "n/a";
    if (cfg.sweep.parameter == "h") {
      sim.sampling.periods = {value};
      sim.sampling.probabilities.clear();
      sim.step = std::min(sim.step, value / 10.0);
      Theorem1Problem p{sim.params, sim.gains};
      p.alpha = cfg.analysis.alpha;
      p.gamma = value;
      p.convention = cfg.analysis.convention;
      p.g_structure = cfg.analysis.g_structure;
      sdp::SolverOptions o;
      o.tol = cfg.analysis.lmi_tol;
      certified = sdp::to_string(check_theorem1(p, o).result.status);
    } else {
      const auto& g = sim.gains;
      sim.gains = ControllerGains(value, g.kv(), g.kd(), g.pe());
    }
    spdlog::info("sweep: {}={}", cfg.sweep.parameter, value);
    const TrajectoryLog log = run_continuous(sim);
    const StabilityVerdict v = stability_verdict(log);
    double rms = std::numeric_limits<double>::quiet_NaN();
    if (v.bounded) rms = tracking_error(log).position.rms_final_third;
    csv += format_number(value) + ',' + (v.bounded ? "bounded" : "divergent") + ',' +
           format_number(v.bounded ? std::numeric_limits<double>::quiet_NaN() : v.blowup_time) +
           ',' + format_number(v.max_abs_q) + ',' + format_number(rms) + ',' + certified + '\n';
    rows.push_back({{"value", value},
                    {"verdict", v.bounded ? "bounded" : "divergent"},
                    {"max_abs_q", v.max_abs_q},
                    {"rms_error", number_or_null(rms)},
                    {"theorem1", certified}});
    if (plot) {
      std::ostringstream name;
      name << "sweep_" << rows.size() << ".svg";
      write_file_atomic(out_path(cfg, name.str()),
                        trajectory_svg(log, cfg.sweep.parameter + " = " + format_number(value)));
      manifest.add(name.str());
    }
  }
  write_file_atomic(out_path(cfg, "sweep.csv"), csv);
  manifest.add("sweep.csv", cfg.sweep.values.size());
  json report = {{"command", "sweep"}, {"parameter", cfg.sweep.parameter}, {"rows", rows}};
  write_file_atomic(out_path(cfg, "sweep_report.json"), report.dump(2) + "\n");
  manifest.add("sweep_report.json");
  manifest.write(cfg.output.dir);
  return report;
}

}  // namespace telestab
