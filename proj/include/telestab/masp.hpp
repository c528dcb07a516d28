#pragma once

// Sampled-data stability certificate for one robot under P+d control, the
// bisection for the maximum allowable sampling period, and a numerical
// Lyapunov–Krasovskii decay check along simulated trajectories.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "telestab/model.hpp"
#include "telestab/sdp.hpp"

namespace telestab {

// kDerived: remote columns +B·Kv, +B·Kp and the decay block built from the
// closed-loop row itself. kLiteral: remote columns −B, −B and the sign
// pattern of the printed decay block.
enum class SignConvention { kDerived, kLiteral };

// Slack multiplier G: symmetric positive definite on the local slots, or an
// unstructured matrix.
enum class GStructure { kSymmetricPositive, kUnstructured };

// Aggregated state χ = [q, q̇, q(t̂_k), q̇(t̂_k), q̇_rem(t̂_k−T), q_rem(t̂_k−T)].
inline constexpr int kAggregatedDim = 6;
inline constexpr int kLocalDim = 4;

// ẋ(t) = Σ·χ(t) + B·F_exo, Σ is 2×6.
Eigen::MatrixXd derive_closed_loop_row(
    const RobotParams& params, const ControllerGains& gains,
    SignConvention convention = SignConvention::kDerived);

struct Theorem1Problem {
  RobotParams params{8.4796e-3, 114.6e-6};
  ControllerGains gains{50.0, 1.0, 25.0, 0.025};
  double alpha = 0.1;
  double gamma = 0.045;
  SignConvention convention = SignConvention::kDerived;
  GStructure g_structure = GStructure::kSymmetricPositive;
  // Keep the two remote slots in χ. The remote diagonal block of the first
  // constraint is then positive semidefinite, so the system is infeasible
  // for every γ; the default drops them and treats remote signals as
  // exogenous inputs.
  bool include_remote_slots = false;

  void validate() const;
  int chi_dim() const { return include_remote_slots ? kAggregatedDim : kLocalDim; }
};

struct Theorem1Lmi {
  sdp::LmiSystem system;
  sdp::VarId P, X, R, G;
};

Theorem1Lmi assemble_theorem1(const Theorem1Problem& prob);

struct Theorem1Certificate {
  Eigen::MatrixXd P, X, R, G;
  double alpha = 0.0;
  double gamma = 0.0;
};

struct Theorem1Check {
  sdp::FeasibilityResult result;
  std::optional<Theorem1Certificate> certificate;  // set when feasible
};

Theorem1Check check_theorem1(const Theorem1Problem& prob,
                             const sdp::SolverOptions& options = {});

struct MaspOptions {
  double alpha = 0.1;
  SignConvention convention = SignConvention::kDerived;
  GStructure g_structure = GStructure::kSymmetricPositive;
  bool monotonicity_check = true;
  int grid_points = 20;
  sdp::SolverOptions solver;
};

struct BisectionStep {
  double gamma = 0.0;
  sdp::Status status = sdp::Status::kIndeterminate;
};

struct MaspResult {
  // Unset when the monotonicity grid shows a feasible point above an
  // infeasible one.
  std::optional<double> gamma_star;
  double tolerance = 0.0;
  double alpha = 0.0;
  double lower = 0.0;  // bracket at exit
  double upper = 0.0;
  int steps = 0;
  std::vector<BisectionStep> history;  // endpoints first, then bisection
  std::vector<BisectionStep> grid;
  bool monotone = true;
  Theorem1Check at_lower;  // certificate at γ*
  Theorem1Check at_upper;
};

// Bisection on [lo, hi] to width <= tol. Indeterminate counts as infeasible.
// Throws BracketError when lo is not feasible or hi is.
MaspResult compute_masp(const RobotParams& params,
                        const ControllerGains& gains, double lo, double hi,
                        double tol, const MaspOptions& options = {});

// Samples of one robot state between two consecutive updates.
struct TrajectorySegment {
  std::vector<double> t;
  std::vector<Eigen::Vector2d> x;
  std::vector<Eigen::Vector2d> xdot;
};

struct LkfEvaluation {
  std::vector<double> t;
  std::vector<double> V;
  // V̇ + αV by central differences; NaN at both ends.
  std::vector<double> residual;
  std::vector<double> V_min;
  std::vector<double> V_max;
};

// Functional evaluated on one hold interval that started at t_n with held
// sample x_n; μ = t − t_n. Needs at least 3 samples.
LkfEvaluation lkf_evaluate(const Theorem1Certificate& cert,
                           const TrajectorySegment& segment,
                           const Eigen::Vector2d& x_n, double t_n);

}  // namespace telestab
