#pragma once

// Markov packet-dropout model, augmented closed-loop maps over the sampled
// state, and the stochastic-stability certificate built on them.
//
// Augmented state (raw signals, one robot i with remote partner r):
//   z = [q̇_i(k_j), q̇_i(k_{j−1}), q̇_r(k_j−T), q̇_r(k_{j−1}−T),
//        q_i(k_j),  q_i(k_{j−1}),  q_r(k_j−T),  q_r(k_{j−1}−T)]
// A Markov state d means d−1 packets are lost before the next delivery.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "telestab/discretize.hpp"
#include "telestab/model.hpp"
#include "telestab/sdp.hpp"

namespace telestab {

inline constexpr int kAugmentedDim = 8;

namespace zslot {
inline constexpr int kVel = 0, kVelPrev = 1, kRemVel = 2, kRemVelPrev = 3;
inline constexpr int kPos = 4, kPosPrev = 5, kRemPos = 6, kRemPosPrev = 7;
}  // namespace zslot

class MarkovChain {
 public:
  // States are 1..M. Throws ArgumentError unless every row is a probability
  // vector (sum within 1e-12). The initial distribution defaults to state 1.
  explicit MarkovChain(Eigen::MatrixXd transition,
                       std::optional<Eigen::VectorXd> initial = std::nullopt);

  int size() const { return static_cast<int>(tau_.rows()); }
  const Eigen::MatrixXd& transition() const { return tau_; }
  const Eigen::VectorXd& initial() const { return initial_; }
  double tau(int from, int to) const { return tau_(from - 1, to - 1); }

 private:
  Eigen::MatrixXd tau_;
  Eigen::VectorXd initial_;
};

// The three-state dropout chain used in the numerical example.
MarkovChain example_chain();

// d_1..d_n with d_1 drawn from row d_0; d_0 from the initial distribution
// unless given.
std::vector<int> sample_chain(const MarkovChain& chain, std::size_t n,
                              std::uint64_t seed,
                              std::optional<int> d0 = std::nullopt);

struct AugmentedModel {
  int d = 1;
  std::size_t h_index = 0;
  double h = 0.0;
  Eigen::MatrixXd A;     // 8×8, z(j+1) = A·z(j)
  Eigen::MatrixXd E;     // gain-free part
  Eigen::MatrixXd F;     // 8×2 input map for [u_j; u_{j−1}]
  Eigen::MatrixXd Kbar;  // 2×8, [u_j; u_{j−1}] = Kbar·z
};

// Commands as functions of z.
Eigen::MatrixXd command_map(const ControllerGains& gains);

// Map over one delivery interval of d steps whose first step has the period
// tables.period(h_index) and whose remaining d−1 steps run at h_max.
AugmentedModel build_augmented(int d, std::size_t h_index,
                               const ExponentialTables& tables,
                               const ControllerGains& gains);

enum class GainMode { kFixed, kFree };

// Dropout chain together with the i.i.d. sampling-period law.
struct StochasticSetup {
  MarkovChain chain;
  std::vector<double> probabilities;  // per period in the tables
  // models[β−1][i] = Ã(β, h_i)
  std::vector<std::vector<AugmentedModel>> models;
};

StochasticSetup build_stochastic_setup(const MarkovChain& chain,
                                       const ExponentialTables& tables,
                                       const std::vector<double>& probabilities,
                                       const ControllerGains& gains);

struct StochasticLmi {
  sdp::LmiSystem system;
  std::vector<sdp::VarId> X;
  sdp::VarId G;
  std::optional<sdp::VarId> Y;  // free gain mode only
  Eigen::MatrixXd Kbar;
};

StochasticLmi assemble_stochastic_lmi(const StochasticSetup& setup,
                                      GainMode mode = GainMode::kFixed);

struct StochasticCertificate {
  std::vector<Eigen::MatrixXd> X;
  Eigen::MatrixXd G;
  Eigen::MatrixXd Y;
  std::vector<Eigen::MatrixXd> W;      // X⁻¹
  std::vector<Eigen::MatrixXd> Omega;  // recomputed, no solver involved
  double omega_max = 0.0;              // max_α λ_max(Ω(α))
  double slack_min = 0.0;  // min_α λ_min(X − G − Gᵀ + GᵀX⁻¹G)
  double rank_margin = 0.0;  // min σ_min over G − X(α) and Y
  bool verified = false;
};

struct StochasticCheck {
  sdp::FeasibilityResult result;
  std::optional<StochasticCertificate> certificate;
};

StochasticCheck check_stochastic(const StochasticSetup& setup,
                                 GainMode mode = GainMode::kFixed,
                                 const sdp::SolverOptions& options = {});

// Fills W, Omega and the checks; `verified` is set when every Ω(α) ≺ 0.
// Throws NumericalError for a singular X(α).
void recompute_omega(StochasticCertificate& cert,
                     const StochasticSetup& setup);

// Ω(α) for given W and models, shared by tests.
std::vector<Eigen::MatrixXd> omega_matrices(
    const std::vector<Eigen::MatrixXd>& W, const StochasticSetup& setup);

struct Definition1Bound {
  double q = 0.0;          // Q = q·I
  double q_literal = 0.0;  // 1 / min_α λ_min(−Ω(α))
};

// Throws ContractError unless the certificate is verified.
Definition1Bound definition1_bound(const StochasticCertificate& cert);

}  // namespace telestab
