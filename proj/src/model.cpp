#include "telestab/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "telestab/errors.hpp"

namespace telestab {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ArgumentError(what);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

RobotParams::RobotParams(double inertia, double damping)
    : inertia_(inertia), damping_(damping) {
  require(std::isfinite(inertia) && inertia > 0.0, "inertia must be > 0");
  require(finite_nonneg(damping), "damping must be >= 0");
}

ControllerGains::ControllerGains(double kp, double kv, double kd, double pe)
    : kp_(kp), kv_(kv), kd_(kd), pe_(pe) {
  require(finite_nonneg(kp), "Kp must be >= 0");
  require(finite_nonneg(kv), "Kv must be >= 0");
  require(finite_nonneg(kd), "Kd must be >= 0");
  require(finite_nonneg(pe), "Pe must be >= 0");
}

DelayPair::DelayPair(double t1, double t2) : t1_(t1), t2_(t2) {
  require(finite_nonneg(t1) && finite_nonneg(t2), "delays must be >= 0");
}

double Reference::at(double t) const {
  if (t < t_start) return 0.0;
  if (kind == Kind::kStep) return target;
  const double ramp = rate * (t - t_start);
  return target >= 0.0 ? std::min(ramp, target) : std::max(-ramp, target);
}

double Reference::magnitude() const { return std::abs(target); }

OperatorModel::OperatorModel(double kh, double bh, Reference reference)
    : kh_(kh), bh_(bh), reference_(reference) {
  require(finite_nonneg(kh) && finite_nonneg(bh),
          "operator gains must be >= 0");
  require(std::isfinite(reference.target) && std::isfinite(reference.t_start),
          "operator reference must be finite");
  require(reference.kind == Reference::Kind::kStep ||
              (std::isfinite(reference.rate) && reference.rate > 0.0),
          "ramp rate must be > 0");
}

EnvironmentModel::EnvironmentModel(double q_wall, double ke, double be)
    : q_wall_(q_wall), ke_(ke), be_(be) {
  require(std::isfinite(q_wall), "wall position must be finite");
  require(finite_nonneg(ke) && finite_nonneg(be),
          "environment gains must be >= 0");
}

ContinuousModel continuous_matrices(const RobotParams& params) {
  ContinuousModel model;
  model.A << 0.0, 1.0, 0.0, -params.damping() / params.inertia();
  model.B << 0.0, 1.0 / params.inertia();
  return model;
}

double pd_control_force(const ControllerGains& gains, const RobotState& local,
                        const RobotState& remote_delayed) {
  return -gains.kv() * (local.qdot - remote_delayed.qdot) -
         (gains.kd() + gains.pe()) * local.qdot -
         gains.kp() * (local.q - remote_delayed.q);
}

double operator_force(const OperatorModel& op, const RobotState& master,
                      double t) {
  return op.kh() * (op.reference().at(t) - master.q) - op.bh() * master.qdot;
}

double environment_force(const EnvironmentModel& env,
                         const RobotState& slave) {
  if (slave.q <= env.q_wall()) return 0.0;
  return -env.ke() * (slave.q - env.q_wall()) - env.be() * slave.qdot;
}

double default_kd(const DelayPair& delays, double kp) {
  return 0.5 * (delays.forward() + delays.backward()) * kp;
}

}  // namespace telestab
