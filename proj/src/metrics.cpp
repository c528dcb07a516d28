#include "telestab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "telestab/errors.hpp"

namespace telestab {

TransparencyReport tracking_error(const TrajectoryLog& log) {
  if (log.divergent)
    throw ClassificationError(
        "log is divergent; use stability_verdict instead of tracking_error");
  TransparencyReport r;
  const auto& d = log.dense;
  if (d.empty()) return r;
  const double t_end = d.back().t;
  const double t_tail = d.front().t + 2.0 * (t_end - d.front().t) / 3.0;
  double ss = 0.0;
  std::size_t tail = 0;
  double fs = 0.0;
  for (const auto& rec : d) {
    const double e = rec.q_m - rec.q_s;
    r.position.max_abs = std::max(r.position.max_abs, std::abs(e));
    if (rec.t >= t_tail) {
      ss += e * e;
      ++tail;
    }
    if (rec.F_e != 0.0) {
      const double fe = rec.F_h - rec.F_e;
      r.force.max_abs = std::max(r.force.max_abs, std::abs(fe));
      fs += fe * fe;
      ++r.force.contact_samples;
    }
  }
  r.position.rms_final_third = tail ? std::sqrt(ss / tail) : 0.0;
  r.position.final_value = d.back().q_m - d.back().q_s;
  r.force.rms = r.force.contact_samples ? std::sqrt(fs / r.force.contact_samples) : 0.0;
  return r;
}

HybridMatrix hybrid_matrix_from(std::complex<double> z_m,
                                std::complex<double> z_s,
                                std::complex<double> c_m,
                                std::complex<double> c_s) {
  const std::complex<double> den = z_s + c_s;
  HybridMatrix h;
  h(0, 0) = z_m + c_m * z_s / den;
  h(0, 1) = c_m / den;
  h(1, 0) = -c_s / den;
  h(1, 1) = 1.0 / den;
  return h;
}

HybridMatrix hybrid_matrix_at(const RobotParams& params,
                              const ControllerGains& gains, double omega,
                              ImpedanceForm form) {
  if (!(omega > 0) || !std::isfinite(omega))
    throw ArgumentError("frequency must be positive");
  const std::complex<double> s(0.0, omega);
  const std::complex<double> mech = params.inertia() * s + params.damping();
  const std::complex<double> z = form == ImpedanceForm::kAdmittance ? 1.0 / mech : mech;
  const std::complex<double> c = gains.kp() / s + gains.local_damping();
  return hybrid_matrix_from(z, z, c, c);
}

HybridMatrix ideal_hybrid_matrix() {
  HybridMatrix h;
  h << 0.0, 1.0, -1.0, 0.0;
  return h;
}

double hybrid_distance(const HybridMatrix& h) {
  return (h - ideal_hybrid_matrix()).norm();
}

std::vector<HybridSample> hybrid_matrix(const RobotParams& params,
                                        const ControllerGains& gains,
                                        const std::vector<double>& omegas,
                                        ImpedanceForm form) {
  std::vector<HybridSample> out;
  out.reserve(omegas.size());
  for (double w : omegas) {
    HybridSample s;
    s.omega = w;
    s.H = hybrid_matrix_at(params, gains, w, form);
    s.distance = hybrid_distance(s.H);
    out.push_back(s);
  }
  return out;
}

StabilityVerdict stability_verdict(const TrajectoryLog& log,
                                   std::optional<double> threshold) {
  StabilityVerdict v;
  v.threshold = threshold.value_or(log.threshold);
  for (const auto& r : log.dense) {
    const bool finite = std::isfinite(r.q_m) && std::isfinite(r.q_s);
    const double q = finite ? std::max(std::abs(r.q_m), std::abs(r.q_s))
                            : std::numeric_limits<double>::infinity();
    const bool bad = !finite || (v.threshold > 0 && q > v.threshold);
    if (std::isfinite(q)) v.max_abs_q = std::max(v.max_abs_q, q);
    if (bad && v.bounded) {
      v.bounded = false;
      v.blowup_time = r.t;
    }
  }
  if (log.divergent && v.bounded) {
    v.bounded = false;
    v.blowup_time = log.blowup_time;
  }
  std::ostringstream os;
  if (v.bounded)
    os << "bounded: max |q| = " << v.max_abs_q << " <= " << v.threshold;
  else
    os << "divergent at t = " << v.blowup_time << " s (threshold "
       << v.threshold << ")";
  v.evidence = os.str();
  return v;
}

}  // namespace telestab
