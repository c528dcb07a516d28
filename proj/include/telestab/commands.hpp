#pragma once

// Experiment commands. Each writes its outputs and a manifest under the
// configured output directory and returns a JSON report. Errors propagate as
// telestab::Error subclasses.

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "telestab/config.hpp"

namespace telestab {

// One row per α (the configured α when `alphas` is empty). The other sign
// convention is evaluated alongside for comparison.
nlohmann::json cmd_masp(const ExperimentConfig& cfg,
                        const std::vector<double>& alphas = {});

nlohmann::json cmd_simulate(const ExperimentConfig& cfg, bool plot = false);

nlohmann::json cmd_stochastic(const ExperimentConfig& cfg);

nlohmann::json cmd_discretize(const ExperimentConfig& cfg, double h);

nlohmann::json cmd_sweep(const ExperimentConfig& cfg, bool plot = false);

}  // namespace telestab
