#pragma once

// Event-driven simulation of the sampled-data master/slave loop: continuous
// robot dynamics integrated with RK4 on a fixed grid, random sampling
// periods, constant channel delays, event-driven zero-order holds and Markov
// packet dropout. Also the exact discrete iteration of the sampled loop and
// a seeded Monte-Carlo driver over it.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "telestab/discretize.hpp"
#include "telestab/dropout.hpp"
#include "telestab/model.hpp"

namespace telestab {

// kBilateral: each hold updates when a delivered remote packet arrives.
// kLocal: remote terms off, each hold updates at its own sampling instants.
enum class Coupling { kBilateral, kLocal };

struct SamplingLaw {
  std::vector<double> periods{0.045, 0.09, 0.21};
  std::vector<double> probabilities;  // empty means uniform
  bool synchronized = false;

  std::vector<double> weights() const;
};

struct DropoutConfig {
  bool enabled = false;
  MarkovChain chain = example_chain();
  bool shared = true;  // both channels read one flag sequence
};

struct SimConfig {
  RobotParams params{8.4796e-3, 114.6e-6};
  ControllerGains gains{50.0, 1.0, 25.0, 0.025};
  DelayPair delays{0.6, 0.4};
  OperatorModel op{75.0, 50.0};
  EnvironmentModel env{4.0, 1000.0, 10.0};
  SamplingLaw sampling;
  DropoutConfig dropout;
  std::uint64_t seed = 1;
  double duration = 30.0;
  double step = 1e-4;
  Coupling coupling = Coupling::kBilateral;
  double divergence_factor = 10.0;
  RobotState master0;
  RobotState slave0;
  // Keep every n-th dense record (events are always kept).
  int trajectory_stride = 1;

  // Throws ArgumentError on inconsistent settings.
  void validate() const;
};

struct DenseRecord {
  double t, q_m, qd_m, q_s, qd_s, F_m, F_s, F_h, F_e;
};

enum class Channel { kMasterToSlave, kSlaveToMaster };
const char* to_string(Channel channel);

struct EventRecord {
  double t_hat;     // sampling instant
  double h_k;       // period until this sampler's next instant
  double t_update;  // instant the packet reaches its hold
  Channel channel;
  bool dropped;
};

struct TrajectoryLog {
  std::vector<DenseRecord> dense;
  std::vector<EventRecord> events;
  bool divergent = false;
  double blowup_time = 0.0;  // valid when divergent
  double max_abs_q = 0.0;
  double threshold = 0.0;
  // Largest t − t̂ of the packet held by either hold.
  double max_network_delay = 0.0;
};

TrajectoryLog run_continuous(const SimConfig& cfg);

// Exact iteration of the sampled loop of one robot over delivery intervals:
// interval j lasts one step of period h_index[j] followed by d[j]−1 steps at
// h_max, with the command from the interval's first sample applied from its
// second step on. `remote` supplies the newly received remote samples
// [q̇_r, q_r] per interval (zero when empty). Returns z(0..n).
std::vector<Eigen::VectorXd> run_discrete_closedloop(
    const ExponentialTables& tables, const ControllerGains& gains,
    const std::vector<int>& d, const std::vector<std::size_t>& h_index,
    const Eigen::VectorXd& z0,
    const std::vector<Eigen::Vector2d>& remote = {});

struct MonteCarloConfig {
  std::vector<double> periods{0.045, 0.09, 0.21};
  std::vector<double> probabilities;  // empty means uniform
  MarkovChain chain = example_chain();
  ControllerGains gains{50.0, 1.0, 25.0, 0.025};
  RobotParams params{8.4796e-3, 114.6e-6};
  Eigen::VectorXd z0 = Eigen::VectorXd::Ones(kAugmentedDim);
  double duration = 30.0;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0 picks the hardware concurrency
};

struct MonteCarloResult {
  std::vector<double> sums;  // per run Σ_j ‖z(j)‖², j from 0
  double mean = 0.0;
  double stddev = 0.0;
  double half_width = 0.0;  // 95% confidence, 1.96·s/√n
  std::size_t runs = 0;
};

MonteCarloResult monte_carlo(const MonteCarloConfig& cfg, std::size_t runs);

}  // namespace telestab
