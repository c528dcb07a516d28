#include "telestab/dropout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "telestab/errors.hpp"
#include "telestab/rng.hpp"

namespace telestab {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<double> row(const MatrixXd& m, int r) {
  std::vector<double> out(m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[c] = m(r, c);
  return out;
}

double sym_max_eig(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double sym_min_eig(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double sigma_min(const MatrixXd& m) {
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues().minCoeff();
}

void check_distribution(const VectorXd& p, const std::string& what) {
  if (!p.allFinite() || (p.array() < 0).any() ||
      std::abs(p.sum() - 1.0) > 1e-12)
    throw ArgumentError(what + " is not a probability vector");
}

}  // namespace

MarkovChain::MarkovChain(MatrixXd transition, std::optional<VectorXd> initial)
    : tau_(std::move(transition)) {
  if (tau_.rows() < 1 || tau_.rows() != tau_.cols())
    throw ArgumentError("transition matrix must be square and non-empty");
  for (Eigen::Index r = 0; r < tau_.rows(); ++r)
    check_distribution(tau_.row(r).transpose(),
                       "transition row " + std::to_string(r + 1));
  if (initial) {
    if (initial->size() != tau_.rows())
      throw ArgumentError("initial distribution has the wrong length");
    check_distribution(*initial, "initial distribution");
    initial_ = *initial;
  } else {
    initial_ = VectorXd::Zero(tau_.rows());
    initial_[0] = 1.0;
  }
}

MarkovChain example_chain() {
  MatrixXd tau(3, 3);
  tau << 0.12, 0.52, 0.36,
         0.11, 0.80, 0.09,
         0.53, 0.14, 0.33;
  return MarkovChain(tau);
}

std::vector<int> sample_chain(const MarkovChain& chain, std::size_t n,
                              std::uint64_t seed, std::optional<int> d0) {
  if (n < 1) throw ArgumentError("sample count must be at least 1");
  Rng rng(seed);
  int d;
  if (d0) {
    if (*d0 < 1 || *d0 > chain.size())
      throw ArgumentError("initial state out of range");
    d = *d0;
  } else {
    std::vector<double> p(chain.initial().data(),
                          chain.initial().data() + chain.size());
    d = static_cast<int>(rng.categorical(p)) + 1;
  }
  std::vector<int> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    d = static_cast<int>(rng.categorical(row(chain.transition(), d - 1))) + 1;
    out.push_back(d);
  }
  return out;
}

MatrixXd command_map(const ControllerGains& gains) {
  using namespace zslot;
  MatrixXd k = MatrixXd::Zero(2, kAugmentedDim);
  // u_j from the k_j entries, u_{j−1} from the k_{j−1} entries.
  const int vel[2] = {kVel, kVelPrev};
  const int rvel[2] = {kRemVel, kRemVelPrev};
  const int pos[2] = {kPos, kPosPrev};
  const int rpos[2] = {kRemPos, kRemPosPrev};
  for (int r = 0; r < 2; ++r) {
    k(r, vel[r]) = -gains.local_damping();
    k(r, rvel[r]) = gains.kv();
    k(r, pos[r]) = -gains.kp();
    k(r, rpos[r]) = gains.kp();
  }
  return k;
}

AugmentedModel build_augmented(int d, std::size_t h_index,
                               const ExponentialTables& tables,
                               const ControllerGains& gains) {
  using namespace zslot;
  if (d < 1 || d - 1 > tables.depth())
    throw ArgumentError("dropout state " + std::to_string(d) +
                        " exceeds table depth");
  if (h_index >= tables.size()) throw ArgumentError("period index out of range");

  AugmentedModel m;
  m.d = d;
  m.h_index = h_index;
  m.h = tables.period(h_index);
  const MatrixXd lead = tables.phi_b_power(d - 1);
  const MatrixXd phi = lead * tables.phi(h_index);
  const MatrixXd gamma_prev = lead * tables.gamma(h_index);
  const MatrixXd gamma_cur = tables.geometric_sum(d - 1);

  // x = [q; q̇] ↔ z slots (kPos, kVel).
  const int xs[2] = {kPos, kVel};
  m.E = MatrixXd::Zero(kAugmentedDim, kAugmentedDim);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m.E(xs[r], xs[c]) = phi(r, c);
  m.E(kPosPrev, kPos) = 1.0;
  m.E(kVelPrev, kVel) = 1.0;
  m.E(kRemPosPrev, kRemPos) = 1.0;
  m.E(kRemVelPrev, kRemVel) = 1.0;

  m.F = MatrixXd::Zero(kAugmentedDim, 2);
  for (int r = 0; r < 2; ++r) {
    m.F(xs[r], 0) = gamma_cur(r, 0);
    m.F(xs[r], 1) = gamma_prev(r, 0);
  }
  m.Kbar = command_map(gains);
  m.A = m.E + m.F * m.Kbar;
  return m;
}

StochasticSetup build_stochastic_setup(const MarkovChain& chain,
                                       const ExponentialTables& tables,
                                       const std::vector<double>& probabilities,
                                       const ControllerGains& gains) {
  if (probabilities.size() != tables.size())
    throw ArgumentError("one probability per sampling period is required");
  check_distribution(Eigen::Map<const VectorXd>(probabilities.data(),
                                                probabilities.size()),
                     "sampling probabilities");
  if (chain.size() - 1 > tables.depth())
    throw ArgumentError("table depth is smaller than the dropout bound");
  StochasticSetup setup{chain, probabilities, {}};
  for (int beta = 1; beta <= chain.size(); ++beta) {
    std::vector<AugmentedModel> row_models;
    for (std::size_t i = 0; i < tables.size(); ++i)
      row_models.push_back(build_augmented(beta, i, tables, gains));
    setup.models.push_back(std::move(row_models));
  }
  return setup;
}

StochasticLmi assemble_stochastic_lmi(const StochasticSetup& setup,
                                      GainMode mode) {
  const int M = setup.chain.size();
  if (static_cast<int>(setup.models.size()) != M)
    throw StructuralError("model count does not match the chain");
  const int n = kAugmentedDim;
  const MatrixXd I = MatrixXd::Identity(n, n);

  StochasticLmi lmi;
  auto& sys = lmi.system;
  for (int a = 1; a <= M; ++a)
    lmi.X.push_back(sys.add_variable("X" + std::to_string(a), n, n,
                                     sdp::Structure::kSymmetric, true));
  lmi.G = sys.add_variable("G", n, n, sdp::Structure::kFull, false);
  if (mode == GainMode::kFree)
    lmi.Y = sys.add_variable("Y", 2, n, sdp::Structure::kFull, false);
  lmi.Kbar = setup.models.front().front().Kbar;

  for (int a = 1; a <= M; ++a) {
    struct Entry {
      int beta;
      std::size_t i;
      double w;
    };
    std::vector<Entry> entries;
    for (int b = 1; b <= M; ++b) {
      const auto& models = setup.models[b - 1];
      if (models.size() != setup.probabilities.size())
        throw StructuralError("model row does not match the period law");
      for (std::size_t i = 0; i < models.size(); ++i) {
        const double w = setup.chain.tau(a, b) * setup.probabilities[i];
        if (w > 0) entries.push_back({b, i, w});
      }
    }
    const int size = n * (1 + static_cast<int>(entries.size()));
    auto& c = sys.add_constraint("mode" + std::to_string(a), size,
                                 sdp::Sense::kNegativeDefinite);
    c.add_congruence(1.0, I, lmi.X[a - 1], 0);
    c.add(-1.0, I, lmi.G, I, 0, 0);
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const auto& m = setup.models[entries[e].beta - 1][entries[e].i];
      const int r = n * (1 + static_cast<int>(e));
      const double s = std::sqrt(entries[e].w);
      if (mode == GainMode::kFixed) {
        c.add(s, m.A, lmi.G, I, r, 0);
      } else {
        c.add(s, m.E, lmi.G, I, r, 0);
        c.add(s, m.F, *lmi.Y, I, r, 0);
      }
      c.add_congruence(-1.0, I, lmi.X[entries[e].beta - 1], r);
    }
  }
  return lmi;
}

std::vector<MatrixXd> omega_matrices(const std::vector<MatrixXd>& W,
                                     const StochasticSetup& setup) {
  const int M = setup.chain.size();
  if (static_cast<int>(W.size()) != M)
    throw ArgumentError("one W per chain state is required");
  std::vector<MatrixXd> out;
  for (int a = 1; a <= M; ++a) {
    MatrixXd omega = -W[a - 1];
    for (int b = 1; b <= M; ++b)
      for (std::size_t i = 0; i < setup.probabilities.size(); ++i) {
        const double w = setup.chain.tau(a, b) * setup.probabilities[i];
        if (w == 0) continue;
        const MatrixXd& A = setup.models[b - 1][i].A;
        omega += w * A.transpose() * W[b - 1] * A;
      }
    out.push_back(0.5 * (omega + omega.transpose()));
  }
  return out;
}

void recompute_omega(StochasticCertificate& cert,
                     const StochasticSetup& setup) {
  cert.W.clear();
  for (const auto& x : cert.X) {
    Eigen::LLT<MatrixXd> llt(0.5 * (x + x.transpose()));
    if (llt.info() != Eigen::Success || sym_min_eig(x) <= 0)
      throw NumericalError("X is not positive definite");
    MatrixXd w = llt.solve(MatrixXd::Identity(x.rows(), x.cols()));
    if (!w.allFinite()) throw NumericalError("X is singular");
    cert.W.push_back(0.5 * (w + w.transpose()));
  }
  cert.Omega = omega_matrices(cert.W, setup);
  cert.omega_max = -std::numeric_limits<double>::infinity();
  for (const auto& o : cert.Omega) cert.omega_max = std::max(cert.omega_max, sym_max_eig(o));

  cert.slack_min = std::numeric_limits<double>::infinity();
  cert.rank_margin = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < cert.X.size(); ++a) {
    const MatrixXd& X = cert.X[a];
    const MatrixXd& G = cert.G;
    cert.slack_min = std::min(
        cert.slack_min,
        sym_min_eig(X - G - G.transpose() + G.transpose() * cert.W[a] * G));
    cert.rank_margin = std::min(cert.rank_margin, sigma_min(G - X));
  }
  if (cert.Y.size() > 0)
    cert.rank_margin = std::min(cert.rank_margin, sigma_min(cert.Y));
  cert.verified = cert.omega_max < 0;
}

StochasticCheck check_stochastic(const StochasticSetup& setup, GainMode mode,
                                 const sdp::SolverOptions& options) {
  const StochasticLmi lmi = assemble_stochastic_lmi(setup, mode);
  StochasticCheck out;
  out.result = sdp::check_feasible(lmi.system, options);
  if (out.result.status != sdp::Status::kFeasible) return out;
  StochasticCertificate cert;
  for (const auto& id : lmi.X) cert.X.push_back(out.result.assignment[id.index]);
  cert.G = out.result.assignment[lmi.G.index];
  cert.Y = lmi.Y ? out.result.assignment[lmi.Y->index] : MatrixXd(lmi.Kbar * cert.G);
  recompute_omega(cert, setup);
  out.certificate = std::move(cert);
  return out;
}

Definition1Bound definition1_bound(const StochasticCertificate& cert) {
  if (!cert.verified || cert.Omega.empty())
    throw ContractError("certificate has not been verified");
  double lam = std::numeric_limits<double>::infinity();
  for (const auto& o : cert.Omega) lam = std::min(lam, sym_min_eig(-o));
  double w_max = 0.0;
  for (const auto& w : cert.W) w_max = std::max(w_max, sym_max_eig(w));
  return {w_max / lam, 1.0 / lam};
}

}  // namespace telestab
