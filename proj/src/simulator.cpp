#include "telestab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <thread>

#include "telestab/errors.hpp"
#include "telestab/rng.hpp"

namespace telestab {

namespace {

using Eigen::Vector2d;
using Eigen::VectorXd;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::int64_t to_steps(double t, double step) {
  return static_cast<std::int64_t>(std::llround(t / step));
}

// Drop flags generated lazily from the Markov chain: state d yields d−1
// drops followed by one delivery.
class DropoutStream {
 public:
  DropoutStream(const MarkovChain& chain, std::uint64_t seed)
      : chain_(chain), rng_(seed) {
    std::vector<double> p(chain.initial().data(),
                          chain.initial().data() + chain.size());
    state_ = static_cast<int>(rng_.categorical(p)) + 1;
  }

  bool dropped(std::size_t k) {
    while (flags_.size() <= k) {
      const auto& tau = chain_.transition();
      std::vector<double> row(tau.cols());
      for (Eigen::Index c = 0; c < tau.cols(); ++c) row[c] = tau(state_ - 1, c);
      state_ = static_cast<int>(rng_.categorical(row)) + 1;
      for (int i = 0; i < state_ - 1; ++i) flags_.push_back(true);
      flags_.push_back(false);
    }
    return flags_[k];
  }

 private:
  const MarkovChain& chain_;
  Rng rng_;
  int state_;
  std::vector<bool> flags_;
};

struct Packet {
  std::int64_t sample_step;
  std::int64_t arrival_step;
  RobotState state;
};

// One side of the loop: its sampler, its outgoing channel and its hold.
struct Side {
  RobotState x;
  std::int64_t next_sample = 0;
  std::size_t packets_sent = 0;
  std::int64_t held_sample_step = -1;  // timestamp of the held packet
  double force = 0.0;                  // hold output
  std::deque<Packet> outgoing;         // in flight towards the partner
};

Vector2d derivative(const RobotParams& p, const Vector2d& x, double force) {
  return {x(1), (force - p.damping() * x(1)) / p.inertia()};
}

}  // namespace

std::vector<double> SamplingLaw::weights() const {
  if (probabilities.empty())
    return std::vector<double>(periods.size(), 1.0 / periods.size());
  return probabilities;
}

const char* to_string(Channel channel) {
  return channel == Channel::kMasterToSlave ? "m2s" : "s2m";
}

void SimConfig::validate() const {
  const auto& hs = sampling.periods;
  if (hs.empty()) throw ArgumentError("sampling set is empty");
  for (double h : hs)
    if (!(h > 0) || !std::isfinite(h))
      throw ArgumentError("sampling periods must be positive");
  const auto w = sampling.weights();
  if (w.size() != hs.size())
    throw ArgumentError("one probability per sampling period is required");
  double sum = 0.0;
  for (double p : w) {
    if (!(p >= 0)) throw ArgumentError("sampling probabilities must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ArgumentError("sampling probabilities must sum to 1");
  if (!(step > 0) || !std::isfinite(step))
    throw ArgumentError("integrator step must be positive");
  const double h_min = *std::min_element(hs.begin(), hs.end());
  if (step > h_min / 10.0 * (1.0 + 1e-12))
    throw ArgumentError("integrator step must be at most min(period)/10");
  if (!(duration > 0) || !std::isfinite(duration))
    throw ArgumentError("duration must be positive");
  if (!(divergence_factor > 0))
    throw ArgumentError("divergence factor must be positive");
  if (trajectory_stride < 1) throw ArgumentError("trajectory stride must be >= 1");
}

TrajectoryLog run_continuous(const SimConfig& cfg) {
  cfg.validate();
  const double dt = cfg.step;
  const std::int64_t n_steps = to_steps(cfg.duration, dt);
  const std::int64_t delay_ms = to_steps(cfg.delays.forward(), dt);
  const std::int64_t delay_sm = to_steps(cfg.delays.backward(), dt);
  const auto weights = cfg.sampling.weights();
  const bool local = cfg.coupling == Coupling::kLocal;

  Rng sampler_m(split_seed(cfg.seed, 0));
  Rng sampler_s(split_seed(cfg.seed, 1));
  std::optional<DropoutStream> drop_m, drop_s;
  if (cfg.dropout.enabled) {
    drop_m.emplace(cfg.dropout.chain, split_seed(cfg.seed, 2));
    if (!cfg.dropout.shared) drop_s.emplace(cfg.dropout.chain, split_seed(cfg.seed, 3));
  }

  TrajectoryLog log;
  log.threshold = cfg.divergence_factor *
                  std::max(std::abs(cfg.op.reference().magnitude()), 1.0);

  Side m, s;
  m.x = cfg.master0;
  s.x = cfg.slave0;

  auto draw_period = [&](Rng& rng) {
    const double h = cfg.sampling.periods[rng.categorical(weights)];
    return std::max<std::int64_t>(1, to_steps(h, dt));
  };

  auto sample = [&](Side& side, std::int64_t n, std::int64_t period,
                    Channel channel, std::int64_t delay) {
    const std::size_t k = side.packets_sent++;
    bool dropped = false;
    if (drop_m) {
      DropoutStream& stream =
          (channel == Channel::kSlaveToMaster && drop_s) ? *drop_s : *drop_m;
      dropped = stream.dropped(k);
    }
    const std::int64_t arrival = local ? n : n + delay;
    if (!dropped) side.outgoing.push_back({n, arrival, side.x});
    log.events.push_back({n * dt, period * dt, arrival * dt, channel, dropped});
    side.next_sample = n + period;
  };

  // A delivered packet updates the receiver's hold, with the receiver's own
  // state read at the arrival instant.
  auto deliver = [&](Side& sender, Side& receiver, std::int64_t n) {
    while (!sender.outgoing.empty() && sender.outgoing.front().arrival_step <= n) {
      const Packet p = sender.outgoing.front();
      sender.outgoing.pop_front();
      if (local) {
        sender.force = -cfg.gains.local_damping() * p.state.qdot -
                       cfg.gains.kp() * p.state.q;
        sender.held_sample_step = p.sample_step;
      } else {
        receiver.force =
            pd_control_force(cfg.gains, receiver.x, p.state);
        receiver.held_sample_step = p.sample_step;
      }
    }
  };

  for (std::int64_t n = 0; n <= n_steps; ++n) {
    const double t = n * dt;
    if (cfg.sampling.synchronized) {
      if (n == m.next_sample) {
        const std::int64_t period = draw_period(sampler_m);
        sample(m, n, period, Channel::kMasterToSlave, delay_ms);
        sample(s, n, period, Channel::kSlaveToMaster, delay_sm);
      }
    } else {
      if (n == m.next_sample)
        sample(m, n, draw_period(sampler_m), Channel::kMasterToSlave, delay_ms);
      if (n == s.next_sample)
        sample(s, n, draw_period(sampler_s), Channel::kSlaveToMaster, delay_sm);
    }
    deliver(m, s, n);
    deliver(s, m, n);

    const double f_h = operator_force(cfg.op, m.x, t);
    const double f_e = environment_force(cfg.env, s.x);
    for (const Side* side : {&m, &s})
      if (side->held_sample_step >= 0)
        log.max_network_delay = std::max(
            log.max_network_delay, t - side->held_sample_step * dt);

    const double worst = std::max(std::abs(m.x.q), std::abs(s.x.q));
    const bool finite = std::isfinite(m.x.q) && std::isfinite(m.x.qdot) &&
                        std::isfinite(s.x.q) && std::isfinite(s.x.qdot);
    if (finite) log.max_abs_q = std::max(log.max_abs_q, worst);
    const bool diverged = !finite || worst > log.threshold;
    if (n % cfg.trajectory_stride == 0 || n == n_steps || diverged)
      log.dense.push_back({t, m.x.q, m.x.qdot, s.x.q, s.x.qdot, m.force,
                           s.force, f_h, f_e});
    if (diverged) {
      log.divergent = true;
      log.blowup_time = t;
      break;
    }
    if (n == n_steps) break;

    // RK4 with held control forces and continuous operator/environment.
    const double fm = m.force, fs = s.force;
    auto fm_at = [&](const Vector2d& x, double tt) {
      return fm + operator_force(cfg.op, RobotState::from(x), tt);
    };
    auto fs_at = [&](const Vector2d& x) {
      return fs + environment_force(cfg.env, RobotState::from(x));
    };
    const Vector2d xm = m.x.vec(), xs = s.x.vec();
    const Vector2d k1m = derivative(cfg.params, xm, fm_at(xm, t));
    const Vector2d k1s = derivative(cfg.params, xs, fs_at(xs));
    const Vector2d xm2 = xm + 0.5 * dt * k1m, xs2 = xs + 0.5 * dt * k1s;
    const Vector2d k2m = derivative(cfg.params, xm2, fm_at(xm2, t + 0.5 * dt));
    const Vector2d k2s = derivative(cfg.params, xs2, fs_at(xs2));
    const Vector2d xm3 = xm + 0.5 * dt * k2m, xs3 = xs + 0.5 * dt * k2s;
    const Vector2d k3m = derivative(cfg.params, xm3, fm_at(xm3, t + 0.5 * dt));
    const Vector2d k3s = derivative(cfg.params, xs3, fs_at(xs3));
    const Vector2d xm4 = xm + dt * k3m, xs4 = xs + dt * k3s;
    const Vector2d k4m = derivative(cfg.params, xm4, fm_at(xm4, t + dt));
    const Vector2d k4s = derivative(cfg.params, xs4, fs_at(xs4));
    m.x = RobotState::from(xm + dt / 6.0 * (k1m + 2 * k2m + 2 * k3m + k4m));
    s.x = RobotState::from(xs + dt / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s));
  }
  return log;
}

std::vector<VectorXd> run_discrete_closedloop(
    const ExponentialTables& tables, const ControllerGains& gains,
    const std::vector<int>& d, const std::vector<std::size_t>& h_index,
    const VectorXd& z0, const std::vector<Vector2d>& remote) {
  using namespace zslot;
  if (d.size() != h_index.size())
    throw ArgumentError("dropout and period sequences differ in length");
  if (!remote.empty() && remote.size() != d.size())
    throw ArgumentError("remote input sequence has the wrong length");
  if (z0.size() != kAugmentedDim) throw ArgumentError("z0 must have 8 entries");

  auto command = [&](double qd, double q, double rqd, double rq) {
    return -gains.local_damping() * qd - gains.kp() * q + gains.kv() * rqd +
           gains.kp() * rq;
  };

  std::vector<VectorXd> out{z0};
  VectorXd z = z0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d[j] < 1 || d[j] - 1 > tables.depth())
      throw ArgumentError("dropout state out of table range");
    const double u_prev = command(z[kVelPrev], z[kPosPrev], z[kRemVelPrev],
                                  z[kRemPosPrev]);
    const double u_cur = command(z[kVel], z[kPos], z[kRemVel], z[kRemPos]);
    const std::size_t i = h_index.at(j);
    if (i >= tables.size()) throw ArgumentError("period index out of range");
    Vector2d x(z[kPos], z[kVel]);
    x = tables.phi(i) * x + tables.gamma(i) * u_prev;
    for (int k = 1; k < d[j]; ++k) x = tables.phi_b() * x + tables.gamma_b() * u_cur;

    VectorXd next(kAugmentedDim);
    next[kPos] = x(0);
    next[kVel] = x(1);
    next[kPosPrev] = z[kPos];
    next[kVelPrev] = z[kVel];
    next[kRemPosPrev] = z[kRemPos];
    next[kRemVelPrev] = z[kRemVel];
    next[kRemVel] = remote.empty() ? 0.0 : remote[j](0);
    next[kRemPos] = remote.empty() ? 0.0 : remote[j](1);
    z = next;
    out.push_back(z);
  }
  return out;
}

MonteCarloResult monte_carlo(const MonteCarloConfig& cfg, std::size_t runs) {
  if (runs < 1) throw ArgumentError("at least one run is required");
  if (cfg.periods.empty()) throw ArgumentError("sampling set is empty");
  if (!(cfg.duration > 0)) throw ArgumentError("duration must be positive");
  if (cfg.z0.size() != kAugmentedDim) throw ArgumentError("z0 must have 8 entries");
  std::vector<double> weights = cfg.probabilities;
  if (weights.empty()) weights.assign(cfg.periods.size(), 1.0 / cfg.periods.size());
  if (weights.size() != cfg.periods.size())
    throw ArgumentError("one probability per sampling period is required");

  const double h_max = *std::max_element(cfg.periods.begin(), cfg.periods.end());
  const ContinuousModel cm = continuous_matrices(cfg.params);
  const ExponentialTables tables(cm.A, cm.B, cfg.periods, h_max,
                                 std::max(1, cfg.chain.size() - 1));
  std::vector<std::vector<AugmentedModel>> models;
  for (int b = 1; b <= cfg.chain.size(); ++b) {
    std::vector<AugmentedModel> row;
    for (std::size_t i = 0; i < tables.size(); ++i)
      row.push_back(build_augmented(b, i, tables, cfg.gains));
    models.push_back(std::move(row));
  }

  MonteCarloResult res;
  res.runs = runs;
  res.sums.assign(runs, 0.0);
  auto one_run = [&](std::size_t k) {
    Rng rng(split_seed(cfg.seed, k));
    std::vector<double> init(cfg.chain.initial().data(),
                             cfg.chain.initial().data() + cfg.chain.size());
    int d = static_cast<int>(rng.categorical(init)) + 1;
    VectorXd z = cfg.z0;
    double sum = z.squaredNorm();
    double t = 0.0;
    std::vector<double> row(cfg.chain.size());
    while (t < cfg.duration && std::isfinite(sum)) {
      for (int c = 0; c < cfg.chain.size(); ++c) row[c] = cfg.chain.tau(d, c + 1);
      d = static_cast<int>(rng.categorical(row)) + 1;
      const std::size_t i = rng.categorical(weights);
      z = models[d - 1][i].A * z;
      sum += z.squaredNorm();
      t += tables.period(i) + (d - 1) * h_max;
    }
    res.sums[k] = sum;
  };

  unsigned threads = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(runs)));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < runs; k += threads) one_run(k);
    });
  for (auto& th : pool) th.join();

  res.mean = std::accumulate(res.sums.begin(), res.sums.end(), 0.0) / runs;
  if (runs > 1) {
    double ss = 0.0;
    for (double v : res.sums) ss += (v - res.mean) * (v - res.mean);
    res.stddev = std::sqrt(ss / (runs - 1));
    res.half_width = 1.96 * res.stddev / std::sqrt(static_cast<double>(runs));
  }
  return res;
}

}  // namespace telestab
