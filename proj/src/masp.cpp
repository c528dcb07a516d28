#include "telestab/masp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <spdlog/spdlog.h>

#include "telestab/errors.hpp"

namespace telestab {

namespace {

using Eigen::MatrixXd;

MatrixXd eye(int n) { return MatrixXd::Identity(n, n); }
MatrixXd zeros(int r, int c) { return MatrixXd::Zero(r, c); }

// Selector realizations against χ of dimension n (4 or 6).
struct Selectors {
  MatrixXd S0, S1, S2, S3, local;  // local picks x(t̂_k)
};

Selectors selectors(int n) {
  Selectors s;
  s.S0 = zeros(2, n);
  s.S0.block(0, 0, 2, 2) = eye(2);
  s.local = zeros(2, n);
  s.local.block(0, 2, 2, 2) = eye(2);
  s.S1 = s.S0 - s.local;
  s.S2 = zeros(4, n);
  s.S2.topRows(2) = s.S1;
  s.S3 = zeros(4, n);
  s.S3.bottomRows(2) = s.local;
  return s;
}

bool feasible(const Theorem1Check& c) {
  return c.result.status == sdp::Status::kFeasible;
}

}  // namespace

MatrixXd derive_closed_loop_row(const RobotParams& params,
                                const ControllerGains& gains,
                                SignConvention convention) {
  const ContinuousModel m = continuous_matrices(params);
  MatrixXd sigma = zeros(2, kAggregatedDim);
  sigma.block(0, 0, 2, 2) = m.A;
  sigma.col(2) = -m.B * gains.kp();
  sigma.col(3) = -m.B * gains.local_damping();
  if (convention == SignConvention::kDerived) {
    sigma.col(4) = m.B * gains.kv();
    sigma.col(5) = m.B * gains.kp();
  } else {
    sigma.col(4) = -m.B;
    sigma.col(5) = -m.B;
  }
  return sigma;
}

void Theorem1Problem::validate() const {
  if (!(alpha > 0) || !std::isfinite(alpha))
    throw ArgumentError("alpha must be positive");
  if (!(gamma > 0) || !std::isfinite(gamma))
    throw ArgumentError("gamma must be positive");
}

Theorem1Lmi assemble_theorem1(const Theorem1Problem& prob) {
  prob.validate();
  const int n = prob.chi_dim();
  const double a = prob.alpha;
  const double g = prob.gamma;
  const MatrixXd full = derive_closed_loop_row(prob.params, prob.gains,
                                               prob.convention);
  const MatrixXd sigma = full.leftCols(n);
  // Row used inside the R term of the decay block.
  MatrixXd sigma1 = sigma;
  if (prob.convention == SignConvention::kLiteral)
    sigma1.block(0, 2, 2, 2) *= -1.0;
  const Selectors s = selectors(n);
  MatrixXd z(4, n);
  z << sigma1, s.local;

  Theorem1Lmi lmi;
  auto& sys = lmi.system;
  using sdp::Sense;
  using sdp::Structure;
  lmi.P = sys.add_variable("P", 2, 2, Structure::kSymmetric, true);
  lmi.X = sys.add_variable("X", 2, 2, Structure::kSymmetric, true);
  lmi.R = sys.add_variable("R", 4, 4, Structure::kSymmetric, true);
  // G multiplies the 4-row descriptor; only its local rows are free in the
  // symmetric mode.
  if (prob.g_structure == GStructure::kSymmetricPositive)
    lmi.G = sys.add_variable("G", 4, 4, Structure::kSymmetric, true);
  else
    lmi.G = sys.add_variable("G", n, 4, Structure::kFull, false);
  MatrixXd g_embed = eye(n);
  if (prob.g_structure == GStructure::kSymmetricPositive) {
    g_embed = zeros(n, 4);
    g_embed.topRows(4) = eye(4);
  }

  // Ω, shared by both constraints.
  auto add_omega = [&](sdp::Constraint& c) {
    c.add(1.0, sigma.transpose(), lmi.P, s.S0, 0, 0);
    c.add_congruence(a, s.S0.transpose(), lmi.P, 0);
    c.add_congruence(-1.0, s.S1.transpose(), lmi.X, 0);
    c.add(-1.0, g_embed, lmi.G, s.S2, 0, 0);
  };

  auto& ca = sys.add_constraint("decay", n, Sense::kNegativeDefinite);
  add_omega(ca);
  ca.add_congruence(g, z.transpose(), lmi.R, 0);
  ca.add_congruence(g * a, s.S1.transpose(), lmi.X, 0);
  ca.add(g, sigma.transpose(), lmi.X, s.S1, 0, 0);

  auto& cb = sys.add_constraint("slack", n + 4, Sense::kNegativeDefinite);
  add_omega(cb);
  cb.add(-g, g_embed, lmi.G, s.S3, 0, 0);
  // γG in the off-diagonal block; the mirror supplies γGᵀ.
  cb.add(g, g_embed, lmi.G, eye(4), 0, n);
  cb.add_congruence(-g * std::exp(-a * g), eye(4), lmi.R, n);
  return lmi;
}

Theorem1Check check_theorem1(const Theorem1Problem& prob,
                             const sdp::SolverOptions& options) {
  const Theorem1Lmi lmi = assemble_theorem1(prob);
  Theorem1Check out;
  out.result = sdp::check_feasible(lmi.system, options);
  if (out.result.status == sdp::Status::kFeasible) {
    const auto& v = out.result.assignment;
    Theorem1Certificate cert;
    cert.P = v[lmi.P.index];
    cert.X = v[lmi.X.index];
    cert.R = v[lmi.R.index];
    cert.G = v[lmi.G.index];
    cert.alpha = prob.alpha;
    cert.gamma = prob.gamma;
    out.certificate = cert;
  }
  spdlog::debug("theorem1 gamma={} status={} margin={}", prob.gamma,
                sdp::to_string(out.result.status), out.result.margin);
  return out;
}

MaspResult compute_masp(const RobotParams& params,
                        const ControllerGains& gains, double lo, double hi,
                        double tol, const MaspOptions& options) {
  if (!(lo > 0) || !(hi > lo) || !std::isfinite(hi))
    throw BracketError("bracket must satisfy 0 < lo < hi");
  if (!(tol > 0)) throw ArgumentError("tolerance must be positive");

  Theorem1Problem prob{params, gains};
  prob.alpha = options.alpha;
  prob.convention = options.convention;
  prob.g_structure = options.g_structure;
  auto check = [&](double gamma) {
    prob.gamma = gamma;
    return check_theorem1(prob, options.solver);
  };

  MaspResult res;
  res.tolerance = tol;
  res.alpha = options.alpha;
  Theorem1Check low = check(lo);
  Theorem1Check high = check(hi);
  res.history.push_back({lo, low.result.status});
  res.history.push_back({hi, high.result.status});
  if (!feasible(low) || feasible(high))
    throw BracketError(std::string("invalid bracket: lower end ") +
                       sdp::to_string(low.result.status) + ", upper end " +
                       sdp::to_string(high.result.status));

  if (options.monotonicity_check && options.grid_points >= 2) {
    // Geometric grid when the bracket spans decades, uniform otherwise.
    const int k = options.grid_points;
    const bool geometric = hi / lo > 10.0;
    bool seen_infeasible = false;
    for (int i = 0; i < k; ++i) {
      const double f = static_cast<double>(i) / (k - 1);
      const double gamma = geometric ? lo * std::pow(hi / lo, f)
                                     : lo + f * (hi - lo);
      const auto st = check(gamma).result.status;
      res.grid.push_back({gamma, st});
      if (st != sdp::Status::kFeasible) {
        seen_infeasible = true;
      } else if (seen_infeasible) {
        res.monotone = false;
      }
    }
    if (!res.monotone) {
      spdlog::warn("feasibility is not monotone in gamma on the grid");
      res.lower = lo;
      res.upper = hi;
      res.at_lower = std::move(low);
      res.at_upper = std::move(high);
      return res;
    }
  }

  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    Theorem1Check c = check(mid);
    res.history.push_back({mid, c.result.status});
    ++res.steps;
    if (feasible(c)) {
      lo = mid;
      low = std::move(c);
    } else {
      hi = mid;
      high = std::move(c);
    }
  }
  res.gamma_star = lo;
  res.lower = lo;
  res.upper = hi;
  res.at_lower = std::move(low);
  res.at_upper = std::move(high);
  return res;
}

LkfEvaluation lkf_evaluate(const Theorem1Certificate& cert,
                           const TrajectorySegment& segment,
                           const Eigen::Vector2d& x_n, double t_n) {
  const std::size_t n = segment.t.size();
  if (n < 3) throw ArgumentError("segment needs at least 3 samples");
  if (segment.x.size() != n || segment.xdot.size() != n)
    throw ArgumentError("segment arrays differ in length");
  if (cert.P.rows() != 2 || cert.X.rows() != 2 || cert.R.rows() != 4)
    throw ArgumentError("certificate blocks have unexpected sizes");

  const double a = cert.alpha;
  const double g = cert.gamma;
  Eigen::SelfAdjointEigenSolver<MatrixXd> ep(cert.P, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<MatrixXd> ex(cert.X, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<MatrixXd> er(cert.R, Eigen::EigenvaluesOnly);
  const double p_min = ep.eigenvalues().minCoeff();
  const double p_max = ep.eigenvalues().maxCoeff();
  const double x_max = ex.eigenvalues().maxCoeff();
  const double r_max = er.eigenvalues().maxCoeff();

  auto integrand = [&](std::size_t i) {
    Eigen::Vector4d v;
    v << segment.xdot[i], x_n;
    return v.dot(cert.R * v);
  };

  LkfEvaluation out;
  out.t = segment.t;
  out.V.resize(n);
  out.residual.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.V_min.resize(n);
  out.V_max.resize(n);
  // ∫_{t_n}^{t} e^{α(s−t)} f(s) ds = e^{−αt} ∫ e^{αs} f(s) ds, accumulated
  // relative to t_n to keep the exponentials bounded.
  double acc = 0.0;
  double sup = x_n.norm();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = segment.t[i];
    if (i > 0) {
      const double t0 = segment.t[i - 1];
      acc += 0.5 * (t - t0) *
             (std::exp(a * (t0 - t_n)) * integrand(i - 1) +
              std::exp(a * (t - t_n)) * integrand(i));
    }
    const double mu = t - t_n;
    const Eigen::Vector2d x = segment.x[i];
    const Eigen::Vector2d e = x - x_n;
    const double integral = std::exp(-a * mu) * acc;
    out.V[i] = x.dot(cert.P * x) + (g - mu) * e.dot(cert.X * e) +
               (g - mu) * integral;
    sup = std::max({sup, x.norm(), segment.xdot[i].norm()});
    out.V_min[i] = p_min * x.squaredNorm();
    out.V_max[i] = p_max * x.squaredNorm() + g * r_max * (1.0 + g) * sup * sup +
                   4.0 * g * x_max * sup * sup;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double dv = (out.V[i + 1] - out.V[i - 1]) /
                      (segment.t[i + 1] - segment.t[i - 1]);
    out.residual[i] = dv + a * out.V[i];
  }
  return out;
}

}  // namespace telestab
