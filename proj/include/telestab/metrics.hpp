#pragma once

// Post-processing of simulation logs: tracking and force-reflection errors,
// the hybrid matrix against its ideal, and a bounded/divergent verdict.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "telestab/model.hpp"
#include "telestab/simulator.hpp"

namespace telestab {

struct TrackingStats {
  double max_abs = 0.0;
  double rms_final_third = 0.0;
  double final_value = 0.0;
};

struct ForceStats {
  double max_abs = 0.0;
  double rms = 0.0;
  std::size_t contact_samples = 0;
};

struct TransparencyReport {
  TrackingStats position;  // e = q_m − q_s
  ForceStats force;        // F_h − F_e while the environment pushes back
};

// Throws ClassificationError for a divergent log.
TransparencyReport tracking_error(const TrajectoryLog& log);

// kAdmittance: Z = 1/(ms + b), kConventional: Z = ms + b.
enum class ImpedanceForm { kAdmittance, kConventional };

using HybridMatrix = Eigen::Matrix2cd;

// Delay-free continuous idealization with C(s) = Kp/s + (Kv + Kd + Pe) on
// both sides and identical robots. Throws ArgumentError for ω <= 0.
HybridMatrix hybrid_matrix_at(const RobotParams& params,
                              const ControllerGains& gains, double omega,
                              ImpedanceForm form = ImpedanceForm::kAdmittance);

// General form for given impedances and controllers at one frequency.
HybridMatrix hybrid_matrix_from(std::complex<double> z_m,
                                std::complex<double> z_s,
                                std::complex<double> c_m,
                                std::complex<double> c_s);

HybridMatrix ideal_hybrid_matrix();

// Frobenius norm of H − H_ideal.
double hybrid_distance(const HybridMatrix& h);

struct HybridSample {
  double omega = 0.0;
  HybridMatrix H;
  double distance = 0.0;
};

std::vector<HybridSample> hybrid_matrix(const RobotParams& params,
                                        const ControllerGains& gains,
                                        const std::vector<double>& omegas,
                                        ImpedanceForm form = ImpedanceForm::kAdmittance);

struct StabilityVerdict {
  bool bounded = true;
  double blowup_time = 0.0;  // valid when not bounded
  double max_abs_q = 0.0;
  double threshold = 0.0;
  std::string evidence;
};

// Divergent when the simulator flagged divergence or any |q| in the log
// exceeds the threshold (the log's own threshold unless overridden).
StabilityVerdict stability_verdict(const TrajectoryLog& log,
                                   std::optional<double> threshold = std::nullopt);

}  // namespace telestab
