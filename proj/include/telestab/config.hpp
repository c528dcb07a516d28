#pragma once

// Experiment configuration: flat JSON object with dotted keys, strict about
// unknown keys and types. Serialization is canonical (sorted keys), so the
// hash of the dump identifies a configuration.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "telestab/dropout.hpp"
#include "telestab/masp.hpp"
#include "telestab/simulator.hpp"

namespace telestab {

struct AnalysisConfig {
  double alpha = 0.1;
  double bracket_lo = 1e-5;
  double bracket_hi = 0.5;
  double tolerance = 1e-6;
  SignConvention convention = SignConvention::kDerived;
  GStructure g_structure = GStructure::kSymmetricPositive;
  double lmi_tol = 1e-7;
  bool monotonicity_check = true;
};

struct StochasticConfig {
  std::size_t runs = 200;
  std::vector<double> z0 = std::vector<double>(kAugmentedDim, 1.0);
  GainMode gain_mode = GainMode::kFixed;
};

struct OutputConfig {
  std::string dir = "out";
};

struct SweepConfig {
  std::string parameter = "h";  // "h" or "kp"
  std::vector<double> values{0.045, 0.09, 0.21, 0.3};
};

struct ExperimentConfig {
  SimConfig sim;
  AnalysisConfig analysis;
  StochasticConfig stochastic;
  OutputConfig output;
  SweepConfig sweep;

  // Runs every constructor-level validation; throws ConfigError.
  void validate() const;
};

ExperimentConfig default_config();

// Throws ConfigError on unknown keys, wrong types or invalid values.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
std::string dump_config(const ExperimentConfig& cfg);  // canonical

// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

// Replace a single key; the value is JSON text. Throws ConfigError.
void set_config_value(ExperimentConfig& cfg, const std::string& key,
                      const std::string& json_value);

}  // namespace telestab
