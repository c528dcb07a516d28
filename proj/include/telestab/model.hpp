#pragma once

// Physical parameters, continuous dynamics and force laws for a single-joint
// master/slave pair. State ordering is x = [q; qdot] everywhere.

#include <Eigen/Dense>

namespace telestab {

class RobotParams {
 public:
  // inertia in kg·m², damping in N·m·s/rad.
  RobotParams(double inertia, double damping);

  double inertia() const { return inertia_; }
  double damping() const { return damping_; }

 private:
  double inertia_;
  double damping_;
};

class ControllerGains {
 public:
  ControllerGains(double kp, double kv, double kd, double pe);

  double kp() const { return kp_; }
  double kv() const { return kv_; }
  double kd() const { return kd_; }
  double pe() const { return pe_; }
  // Total local velocity gain Kv + Kd + Pe.
  double local_damping() const { return kv_ + kd_ + pe_; }

 private:
  double kp_, kv_, kd_, pe_;
};

class DelayPair {
 public:
  // t1: master→slave, t2: slave→master, both in seconds.
  DelayPair(double t1, double t2);

  double forward() const { return t1_; }
  double backward() const { return t2_; }

 private:
  double t1_, t2_;
};

struct RobotState {
  double q = 0.0;
  double qdot = 0.0;

  Eigen::Vector2d vec() const { return {q, qdot}; }
  static RobotState from(const Eigen::Vector2d& x) { return {x(0), x(1)}; }
};

// Operator reference q_ref(t): a step to `target` at `t_start`, or a ramp of
// slope `rate` starting at `t_start` and saturating at `target`.
struct Reference {
  enum class Kind { kStep, kRamp };
  Kind kind = Kind::kStep;
  double target = 5.0;
  double t_start = 0.0;
  double rate = 1.0;

  double at(double t) const;
  double magnitude() const;
};

class OperatorModel {
 public:
  OperatorModel(double kh, double bh, Reference reference = {});

  double kh() const { return kh_; }
  double bh() const { return bh_; }
  const Reference& reference() const { return reference_; }

 private:
  double kh_, bh_;
  Reference reference_;
};

// Unilateral spring-damper wall; active only while q_s > q_wall.
class EnvironmentModel {
 public:
  EnvironmentModel(double q_wall, double ke, double be);

  double q_wall() const { return q_wall_; }
  double ke() const { return ke_; }
  double be() const { return be_; }

 private:
  double q_wall_, ke_, be_;
};

struct ContinuousModel {
  Eigen::Matrix2d A;
  Eigen::Vector2d B;
};

ContinuousModel continuous_matrices(const RobotParams& params);

// P+d torque. `remote_delayed` is the remote robot's sample taken T earlier
// (T2 for the master, T1 for the slave).
double pd_control_force(const ControllerGains& gains, const RobotState& local,
                        const RobotState& remote_delayed);

double operator_force(const OperatorModel& op, const RobotState& master,
                      double t);

double environment_force(const EnvironmentModel& env, const RobotState& slave);

double default_kd(const DelayPair& delays, double kp);

}  // namespace telestab
