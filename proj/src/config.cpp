#include "telestab/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "telestab/errors.hpp"

namespace telestab {

namespace {

using nlohmann::json;

struct Field {
  const char* key;
  std::function<json(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const json&)> set;
};

double num(const json& v) {
  if (!v.is_number()) throw ConfigError("expected a number");
  return v.get<double>();
}

bool flag(const json& v) {
  if (!v.is_boolean()) throw ConfigError("expected a boolean");
  return v.get<bool>();
}

std::string text(const json& v) {
  if (!v.is_string()) throw ConfigError("expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& v) {
  if (!v.is_array()) throw ConfigError("expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(num(e));
  return out;
}

std::uint64_t unsigned_int(const json& v) {
  if (!v.is_number_unsigned() &&
      !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ConfigError("expected a non-negative integer");
  return v.get<std::uint64_t>();
}

RobotState state(const json& v) {
  const auto xs = numbers(v);
  if (xs.size() != 2) throw ConfigError("expected [q, qdot]");
  return {xs[0], xs[1]};
}

json matrix(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix(const json& v) {
  if (!v.is_array() || v.empty()) throw ConfigError("expected a matrix");
  const std::size_t cols = v.front().is_array() ? v.front().size() : 0;
  Eigen::MatrixXd m(v.size(), cols);
  for (std::size_t r = 0; r < v.size(); ++r) {
    const auto row = numbers(v[r]);
    if (row.size() != cols) throw ConfigError("ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  return m;
}

const char* name(SignConvention c) {
  return c == SignConvention::kDerived ? "derived" : "literal";
}
const char* name(GStructure g) {
  return g == GStructure::kSymmetricPositive ? "symmetric" : "unstructured";
}
const char* name(GainMode g) { return g == GainMode::kFixed ? "fixed" : "free"; }
const char* name(Coupling c) {
  return c == Coupling::kBilateral ? "bilateral" : "local";
}
const char* name(Reference::Kind k) {
  return k == Reference::Kind::kStep ? "step" : "ramp";
}

template <typename E>
E pick(const json& v, std::initializer_list<std::pair<const char*, E>> options) {
  const std::string s = text(v);
  for (const auto& [label, value] : options)
    if (s == label) return value;
  throw ConfigError("unknown option '" + s + "'");
}

void set_reference(ExperimentConfig& c, const std::function<void(Reference&)>& f) {
  Reference r = c.sim.op.reference();
  f(r);
  c.sim.op = OperatorModel(c.sim.op.kh(), c.sim.op.bh(), r);
}

void set_chain(ExperimentConfig& c, const Eigen::MatrixXd& tau,
               const Eigen::VectorXd& init) {
  // Chain size changes may leave the initial distribution stale; reset it
  // to state 1 in that case and let a later key override it.
  if (init.size() == tau.rows())
    c.sim.dropout.chain = MarkovChain(tau, init);
  else
    c.sim.dropout.chain = MarkovChain(tau);
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"robot.inertia", [](auto& c) { return json(c.sim.params.inertia()); },
       [](auto& c, auto& v) { c.sim.params = RobotParams(num(v), c.sim.params.damping()); }},
      {"robot.damping", [](auto& c) { return json(c.sim.params.damping()); },
       [](auto& c, auto& v) { c.sim.params = RobotParams(c.sim.params.inertia(), num(v)); }},
      {"gains.kp", [](auto& c) { return json(c.sim.gains.kp()); },
       [](auto& c, auto& v) {
         const auto& g = c.sim.gains;
         c.sim.gains = ControllerGains(num(v), g.kv(), g.kd(), g.pe());
       }},
      {"gains.kv", [](auto& c) { return json(c.sim.gains.kv()); },
       [](auto& c, auto& v) {
         const auto& g = c.sim.gains;
         c.sim.gains = ControllerGains(g.kp(), num(v), g.kd(), g.pe());
       }},
      {"gains.kd", [](auto& c) { return json(c.sim.gains.kd()); },
       [](auto& c, auto& v) {
         const auto& g = c.sim.gains;
         c.sim.gains = ControllerGains(g.kp(), g.kv(), num(v), g.pe());
       }},
      {"gains.pe", [](auto& c) { return json(c.sim.gains.pe()); },
       [](auto& c, auto& v) {
         const auto& g = c.sim.gains;
         c.sim.gains = ControllerGains(g.kp(), g.kv(), g.kd(), num(v));
       }},
      {"delays.t1", [](auto& c) { return json(c.sim.delays.forward()); },
       [](auto& c, auto& v) { c.sim.delays = DelayPair(num(v), c.sim.delays.backward()); }},
      {"delays.t2", [](auto& c) { return json(c.sim.delays.backward()); },
       [](auto& c, auto& v) { c.sim.delays = DelayPair(c.sim.delays.forward(), num(v)); }},
      {"operator.kh", [](auto& c) { return json(c.sim.op.kh()); },
       [](auto& c, auto& v) {
         c.sim.op = OperatorModel(num(v), c.sim.op.bh(), c.sim.op.reference());
       }},
      {"operator.bh", [](auto& c) { return json(c.sim.op.bh()); },
       [](auto& c, auto& v) {
         c.sim.op = OperatorModel(c.sim.op.kh(), num(v), c.sim.op.reference());
       }},
      {"operator.reference.kind",
       [](auto& c) { return json(name(c.sim.op.reference().kind)); },
       [](auto& c, auto& v) {
         const auto k = pick<Reference::Kind>(
             v, {{"step", Reference::Kind::kStep}, {"ramp", Reference::Kind::kRamp}});
         set_reference(c, [&](Reference& r) { r.kind = k; });
       }},
      {"operator.reference.target",
       [](auto& c) { return json(c.sim.op.reference().target); },
       [](auto& c, auto& v) {
         const double x = num(v);
         set_reference(c, [&](Reference& r) { r.target = x; });
       }},
      {"operator.reference.t_start",
       [](auto& c) { return json(c.sim.op.reference().t_start); },
       [](auto& c, auto& v) {
         const double x = num(v);
         set_reference(c, [&](Reference& r) { r.t_start = x; });
       }},
      {"operator.reference.rate",
       [](auto& c) { return json(c.sim.op.reference().rate); },
       [](auto& c, auto& v) {
         const double x = num(v);
         set_reference(c, [&](Reference& r) { r.rate = x; });
       }},
      {"environment.q_wall", [](auto& c) { return json(c.sim.env.q_wall()); },
       [](auto& c, auto& v) {
         c.sim.env = EnvironmentModel(num(v), c.sim.env.ke(), c.sim.env.be());
       }},
      {"environment.ke", [](auto& c) { return json(c.sim.env.ke()); },
       [](auto& c, auto& v) {
         c.sim.env = EnvironmentModel(c.sim.env.q_wall(), num(v), c.sim.env.be());
       }},
      {"environment.be", [](auto& c) { return json(c.sim.env.be()); },
       [](auto& c, auto& v) {
         c.sim.env = EnvironmentModel(c.sim.env.q_wall(), c.sim.env.ke(), num(v));
       }},
      {"sampling.periods", [](auto& c) { return json(c.sim.sampling.periods); },
       [](auto& c, auto& v) { c.sim.sampling.periods = numbers(v); }},
      {"sampling.probabilities",
       [](auto& c) { return json(c.sim.sampling.probabilities); },
       [](auto& c, auto& v) { c.sim.sampling.probabilities = numbers(v); }},
      {"sampling.synchronized",
       [](auto& c) { return json(c.sim.sampling.synchronized); },
       [](auto& c, auto& v) { c.sim.sampling.synchronized = flag(v); }},
      {"sim.duration", [](auto& c) { return json(c.sim.duration); },
       [](auto& c, auto& v) { c.sim.duration = num(v); }},
      {"sim.step", [](auto& c) { return json(c.sim.step); },
       [](auto& c, auto& v) { c.sim.step = num(v); }},
      {"sim.seed", [](auto& c) { return json(c.sim.seed); },
       [](auto& c, auto& v) { c.sim.seed = unsigned_int(v); }},
      {"sim.coupling", [](auto& c) { return json(name(c.sim.coupling)); },
       [](auto& c, auto& v) {
         c.sim.coupling = pick<Coupling>(
             v, {{"bilateral", Coupling::kBilateral}, {"local", Coupling::kLocal}});
       }},
      {"sim.divergence_factor",
       [](auto& c) { return json(c.sim.divergence_factor); },
       [](auto& c, auto& v) { c.sim.divergence_factor = num(v); }},
      {"sim.initial.master",
       [](auto& c) { return json::array({c.sim.master0.q, c.sim.master0.qdot}); },
       [](auto& c, auto& v) { c.sim.master0 = state(v); }},
      {"sim.initial.slave",
       [](auto& c) { return json::array({c.sim.slave0.q, c.sim.slave0.qdot}); },
       [](auto& c, auto& v) { c.sim.slave0 = state(v); }},
      {"output.trajectory_stride",
       [](auto& c) { return json(c.sim.trajectory_stride); },
       [](auto& c, auto& v) { c.sim.trajectory_stride = static_cast<int>(unsigned_int(v)); }},
      {"dropout.enabled", [](auto& c) { return json(c.sim.dropout.enabled); },
       [](auto& c, auto& v) { c.sim.dropout.enabled = flag(v); }},
      {"dropout.transition",
       [](auto& c) { return matrix(c.sim.dropout.chain.transition()); },
       [](auto& c, auto& v) {
         set_chain(c, matrix(v), c.sim.dropout.chain.initial());
       }},
      {"dropout.initial",
       [](auto& c) {
         const auto& p = c.sim.dropout.chain.initial();
         return json(std::vector<double>(p.data(), p.data() + p.size()));
       },
       [](auto& c, auto& v) {
         const auto p = numbers(v);
         const auto& tau = c.sim.dropout.chain.transition();
         if (static_cast<Eigen::Index>(p.size()) != tau.rows())
           throw ConfigError("initial distribution length differs from the chain");
         c.sim.dropout.chain = MarkovChain(
             tau, Eigen::Map<const Eigen::VectorXd>(p.data(), p.size()));
       }},
      {"dropout.shared", [](auto& c) { return json(c.sim.dropout.shared); },
       [](auto& c, auto& v) { c.sim.dropout.shared = flag(v); }},
      {"analysis.alpha", [](auto& c) { return json(c.analysis.alpha); },
       [](auto& c, auto& v) { c.analysis.alpha = num(v); }},
      {"analysis.bracket",
       [](auto& c) { return json::array({c.analysis.bracket_lo, c.analysis.bracket_hi}); },
       [](auto& c, auto& v) {
         const auto b = numbers(v);
         if (b.size() != 2) throw ConfigError("bracket needs two entries");
         c.analysis.bracket_lo = b[0];
         c.analysis.bracket_hi = b[1];
       }},
      {"analysis.tolerance", [](auto& c) { return json(c.analysis.tolerance); },
       [](auto& c, auto& v) { c.analysis.tolerance = num(v); }},
      {"analysis.convention",
       [](auto& c) { return json(name(c.analysis.convention)); },
       [](auto& c, auto& v) {
         c.analysis.convention = pick<SignConvention>(
             v, {{"derived", SignConvention::kDerived},
                 {"literal", SignConvention::kLiteral}});
       }},
      {"analysis.g_structure",
       [](auto& c) { return json(name(c.analysis.g_structure)); },
       [](auto& c, auto& v) {
         c.analysis.g_structure = pick<GStructure>(
             v, {{"symmetric", GStructure::kSymmetricPositive},
                 {"unstructured", GStructure::kUnstructured}});
       }},
      {"analysis.lmi_tol", [](auto& c) { return json(c.analysis.lmi_tol); },
       [](auto& c, auto& v) { c.analysis.lmi_tol = num(v); }},
      {"analysis.monotonicity_check",
       [](auto& c) { return json(c.analysis.monotonicity_check); },
       [](auto& c, auto& v) { c.analysis.monotonicity_check = flag(v); }},
      {"stochastic.runs", [](auto& c) { return json(c.stochastic.runs); },
       [](auto& c, auto& v) { c.stochastic.runs = unsigned_int(v); }},
      {"stochastic.z0", [](auto& c) { return json(c.stochastic.z0); },
       [](auto& c, auto& v) { c.stochastic.z0 = numbers(v); }},
      {"stochastic.gain_mode",
       [](auto& c) { return json(name(c.stochastic.gain_mode)); },
       [](auto& c, auto& v) {
         c.stochastic.gain_mode =
             pick<GainMode>(v, {{"fixed", GainMode::kFixed}, {"free", GainMode::kFree}});
       }},
      {"output.dir", [](auto& c) { return json(c.output.dir); },
       [](auto& c, auto& v) { c.output.dir = text(v); }},
      {"sweep.parameter", [](auto& c) { return json(c.sweep.parameter); },
       [](auto& c, auto& v) {
         const std::string p = text(v);
         if (p != "h" && p != "kp") throw ConfigError("sweep parameter must be h or kp");
         c.sweep.parameter = p;
       }},
      {"sweep.values", [](auto& c) { return json(c.sweep.values); },
       [](auto& c, auto& v) { c.sweep.values = numbers(v); }},
  };
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields())
    if (key == f.key) return f;
  throw ConfigError("unknown config key '" + key + "'");
}

void apply(ExperimentConfig& cfg, const std::string& key, const json& v) {
  const Field& f = field(key);
  try {
    f.set(cfg, v);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    sim.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const auto& a = analysis;
  if (!(a.alpha > 0)) throw ConfigError("analysis.alpha must be > 0");
  if (!(a.bracket_lo > 0) || !(a.bracket_hi > a.bracket_lo))
    throw ConfigError("analysis.bracket must satisfy 0 < lo < hi");
  if (!(a.tolerance > 0)) throw ConfigError("analysis.tolerance must be > 0");
  if (!(a.lmi_tol > 0)) throw ConfigError("analysis.lmi_tol must be > 0");
  if (stochastic.runs < 1) throw ConfigError("stochastic.runs must be >= 1");
  if (stochastic.z0.size() != static_cast<std::size_t>(kAugmentedDim))
    throw ConfigError("stochastic.z0 must have 8 entries");
  if (output.dir.empty()) throw ConfigError("output.dir must not be empty");
  if (sweep.values.empty()) throw ConfigError("sweep.values must not be empty");
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  // Chain shape first so the initial distribution can refer to it.
  if (j.contains("dropout.transition"))
    apply(cfg, "dropout.transition", j.at("dropout.transition"));
  for (const auto& [key, value] : j.items()) {
    if (key == "dropout.transition") continue;
    apply(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json config_to_json(const ExperimentConfig& cfg) {
  json j = json::object();
  for (const auto& f : fields()) j[f.key] = f.get(cfg);
  return j;
}

std::string dump_config(const ExperimentConfig& cfg) {
  return config_to_json(cfg).dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config_to_json(cfg).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key,
                      const std::string& json_value) {
  json v;
  try {
    v = json::parse(json_value);
  } catch (const json::parse_error& e) {
    throw ConfigError(key + ": malformed value: " + e.what());
  }
  ExperimentConfig next = cfg;
  apply(next, key, v);
  next.validate();
  cfg = std::move(next);
}

}  // namespace telestab
