#include <gtest/gtest.h>

#include <cmath>

#include "telestab/discretize.hpp"
#include "telestab/dropout.hpp"
#include "telestab/errors.hpp"
#include "telestab/rng.hpp"
#include "telestab/simulator.hpp"

using namespace telestab;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const RobotParams kParams(8.4796e-3, 114.6e-6);
const ControllerGains kGains(50, 1, 25, 0.025);
const std::vector<double> kPeriods{0.045, 0.09, 0.21};

ExponentialTables fixture_tables() {
  const auto cm = continuous_matrices(kParams);
  return ExponentialTables(cm.A, cm.B, kPeriods, 0.21, 2);
}

// Single-state setup whose only mode is Ã = a·I.
StochasticSetup toy_setup(double a) {
  AugmentedModel m;
  m.A = a * MatrixXd::Identity(kAugmentedDim, kAugmentedDim);
  m.E = m.A;
  m.F = MatrixXd::Zero(kAugmentedDim, 2);
  m.Kbar = MatrixXd::Zero(2, kAugmentedDim);
  return StochasticSetup{MarkovChain(MatrixXd::Ones(1, 1)), {1.0}, {{m}}};
}

}  // namespace

TEST(MarkovChain, Validation) {
  EXPECT_THROW(MarkovChain((MatrixXd(2, 2) << 0.5, 0.6, 0.5, 0.5).finished()),
               ArgumentError);
  EXPECT_THROW(MarkovChain((MatrixXd(2, 2) << 1.1, -0.1, 0.5, 0.5).finished()),
               ArgumentError);
  EXPECT_THROW(MarkovChain(MatrixXd::Ones(2, 3)), ArgumentError);
  EXPECT_THROW(MarkovChain(MatrixXd::Identity(2, 2), VectorXd::Ones(2)), ArgumentError);
}

TEST(MarkovChain, ExampleRowsSumToOne) {
  const auto c = example_chain();
  ASSERT_EQ(c.size(), 3);
  for (int r = 0; r < 3; ++r) EXPECT_EQ(c.transition().row(r).sum(), 1.0);
  EXPECT_DOUBLE_EQ(c.tau(1, 2), 0.52);
  EXPECT_DOUBLE_EQ(c.tau(3, 1), 0.53);
}

TEST(SampleChain, SingleStateAndAbsorbing) {
  const auto one = sample_chain(MarkovChain(MatrixXd::Ones(1, 1)), 50, 3);
  for (int d : one) EXPECT_EQ(d, 1);
  const MarkovChain absorbing(MatrixXd::Identity(3, 3));
  for (int d0 = 1; d0 <= 3; ++d0)
    for (int d : sample_chain(absorbing, 40, 9, d0)) EXPECT_EQ(d, d0);
  EXPECT_THROW(sample_chain(absorbing, 0, 1), ArgumentError);
  EXPECT_THROW(sample_chain(absorbing, 5, 1, 4), ArgumentError);
}

TEST(SampleChain, EmpiricalFrequencies) {
  const auto chain = example_chain();
  const auto seq = sample_chain(chain, 100000, 2024, 1);
  MatrixXd counts = MatrixXd::Zero(3, 3);
  int prev = 1;
  for (int d : seq) {
    counts(prev - 1, d - 1) += 1;
    prev = d;
  }
  for (int r = 0; r < 3; ++r) {
    const auto freq = counts.row(r) / counts.row(r).sum();
    for (int c = 0; c < 3; ++c)
      EXPECT_NEAR(freq(c), chain.transition()(r, c), 0.01) << r << ',' << c;
  }
}

TEST(SampleChain, Reproducible) {
  const auto chain = example_chain();
  EXPECT_EQ(sample_chain(chain, 500, 42), sample_chain(chain, 500, 42));
  EXPECT_NE(sample_chain(chain, 500, 42), sample_chain(chain, 500, 43));
}

TEST(Augmented, ZeroGainsNoDropoutPropagatesByPhi) {
  const auto t = fixture_tables();
  const auto m = build_augmented(1, 0, t, ControllerGains(0, 0, 0, 0));
  using namespace zslot;
  EXPECT_EQ(m.A(kPos, kPos), t.phi(0)(0, 0));
  EXPECT_EQ(m.A(kPos, kVel), t.phi(0)(0, 1));
  EXPECT_EQ(m.A(kVel, kPos), t.phi(0)(1, 0));
  EXPECT_EQ(m.A(kVel, kVel), t.phi(0)(1, 1));
  EXPECT_LT((m.A - (m.E + m.F * m.Kbar)).norm(), 1e-15);
}

TEST(Augmented, DelayedLocalPositionGain) {
  const auto t = fixture_tables();
  const auto m = build_augmented(1, 1, t, kGains);
  using namespace zslot;
  EXPECT_NEAR(m.A(kPos, kPosPrev), -t.gamma(1)(0) * kGains.kp(), 1e-15);
  EXPECT_NEAR(m.A(kVel, kPosPrev), -t.gamma(1)(1) * kGains.kp(), 1e-12);
  // No current-command term when nothing is dropped (S_0 = 0).
  EXPECT_EQ(m.A(kVel, kPos), t.phi(1)(1, 0));
}

TEST(Augmented, TwoStepMatchesComposedHolds) {
  const auto t = fixture_tables();
  const auto cm = continuous_matrices(kParams);
  for (std::size_t i = 0; i < kPeriods.size(); ++i) {
    const auto m = build_augmented(2, i, t, kGains);
    const auto first = zoh_discretize(cm.A, cm.B, kPeriods[i]);
    const auto second = zoh_discretize(cm.A, cm.B, 0.21);
    VectorXd z(8);
    z << 0.3, -0.1, 0.2, 0.05, 1.0, 0.9, 0.7, 0.8;
    using namespace zslot;
    auto u = [&](int v, int rv, int p, int rp) {
      return -(1 + 25 + 0.025) * z[v] + 1.0 * z[rv] - 50.0 * z[p] + 50.0 * z[rp];
    };
    const double u_prev = u(kVelPrev, kRemVelPrev, kPosPrev, kRemPosPrev);
    const double u_cur = u(kVel, kRemVel, kPos, kRemPos);
    Eigen::Vector2d x(z[kPos], z[kVel]);
    x = first.Ad * x + first.Bd * u_prev;
    x = second.Ad * x + second.Bd * u_cur;
    const VectorXd next = m.A * z;
    EXPECT_LT(std::abs(next[kPos] - x(0)), 1e-10 * std::max(1.0, std::abs(x(0))));
    EXPECT_LT(std::abs(next[kVel] - x(1)), 1e-10 * std::max(1.0, std::abs(x(1))));
    EXPECT_EQ(next[kPosPrev], z[kPos]);
    EXPECT_EQ(next[kRemVelPrev], z[kRemVel]);
    EXPECT_EQ(next[kRemPos], 0.0);
  }
}

TEST(Augmented, Errors) {
  const auto t = fixture_tables();
  EXPECT_THROW(build_augmented(0, 0, t, kGains), ArgumentError);
  EXPECT_THROW(build_augmented(4, 0, t, kGains), ArgumentError);
  EXPECT_THROW(build_augmented(1, 3, t, kGains), ArgumentError);
}

TEST(Augmented, ConsistentWithStepByStepIteration) {
  const auto t = fixture_tables();
  const auto chain = example_chain();
  std::vector<std::vector<AugmentedModel>> models(3);
  for (int b = 1; b <= 3; ++b)
    for (std::size_t i = 0; i < 3; ++i) models[b - 1].push_back(build_augmented(b, i, t, kGains));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto d = sample_chain(chain, 50, seed);
    Rng rng(seed + 1000);
    std::vector<std::size_t> hi;
    for (int j = 0; j < 50; ++j) hi.push_back(rng.categorical({1 / 3.0, 1 / 3.0, 1 / 3.0}));
    VectorXd z0(8);
    for (int k = 0; k < 8; ++k) z0[k] = rng.uniform() - 0.5;
    const auto ref = run_discrete_closedloop(t, kGains, d, hi, z0);
    VectorXd z = z0;
    for (int j = 0; j < 50; ++j) {
      z = models[d[j] - 1][hi[j]].A * z;
      for (int k = 0; k < 8; ++k)
        ASSERT_LE(std::abs(z[k] - ref[j + 1][k]), 1e-8 * std::max(1.0, std::abs(ref[j + 1][k])))
            << "seed " << seed << " step " << j;
    }
  }
}

TEST(StochasticLmi, ContractiveToyIsFeasible) {
  const auto setup = toy_setup(0.5);
  const auto c = check_stochastic(setup);
  ASSERT_EQ(c.result.status, sdp::Status::kFeasible);
  ASSERT_TRUE(c.certificate);
  EXPECT_TRUE(c.certificate->verified);
  EXPECT_LT(c.certificate->omega_max, 0.0);
  const auto lmi = assemble_stochastic_lmi(setup);
  for (const auto& m : sdp::verify_certificate(lmi.system, c.result.assignment))
    EXPECT_GE(m.slack, 1e-7) << m.name;
}

TEST(StochasticLmi, ExpandingToyIsInfeasible) {
  const auto c = check_stochastic(toy_setup(2.0));
  EXPECT_NE(c.result.status, sdp::Status::kFeasible);
  EXPECT_FALSE(c.certificate.has_value());
}

TEST(StochasticLmi, ModelCountMismatch) {
  auto setup = toy_setup(0.5);
  setup.models.push_back(setup.models.front());
  EXPECT_THROW(assemble_stochastic_lmi(setup), StructuralError);
}

TEST(StochasticLmi, FixtureFixedGainsAreNotCertified) {
  const auto t = fixture_tables();
  const auto setup = build_stochastic_setup(example_chain(), t, {1 / 3.0, 1 / 3.0, 1 / 3.0}, kGains);
  EXPECT_EQ(setup.models.size(), 3u);
  EXPECT_EQ(setup.models[0].size(), 3u);
  // Every mode is expanding: the d = 1 map at h = 0.045 has spectral radius > 1.
  EXPECT_GT(setup.models[0][0].A.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
  EXPECT_NE(check_stochastic(setup).result.status, sdp::Status::kFeasible);
}

TEST(Omega, ScalarArithmetic) {
  const auto setup = toy_setup(0.5);
  const auto om = omega_matrices({MatrixXd::Identity(8, 8)}, setup);
  ASSERT_EQ(om.size(), 1u);
  EXPECT_LT((om[0] + 0.75 * MatrixXd::Identity(8, 8)).norm(), 1e-15);
}

TEST(Omega, SlackBoundaryAtGEqualsX) {
  const auto setup = toy_setup(0.5);
  StochasticCertificate cert;
  cert.X = {2.0 * MatrixXd::Identity(8, 8)};
  cert.G = cert.X[0];
  cert.Y = MatrixXd::Zero(2, 8);
  recompute_omega(cert, setup);
  // X − G − Gᵀ + GᵀX⁻¹G = 2I − 4I + 2I = 0.
  EXPECT_NEAR(cert.slack_min, 0.0, 1e-14);
  EXPECT_TRUE(cert.verified);
  EXPECT_LT((cert.Omega[0] + 0.375 * MatrixXd::Identity(8, 8)).norm(), 1e-14);
}

TEST(Omega, SingularXIsNumericalError) {
  StochasticCertificate cert;
  cert.X = {MatrixXd::Zero(8, 8)};
  cert.G = MatrixXd::Identity(8, 8);
  cert.Y = MatrixXd::Zero(2, 8);
  EXPECT_THROW(recompute_omega(cert, toy_setup(0.5)), NumericalError);
}

TEST(StabilityBound, ToyBoundCoversGeometricSeries) {
  const auto c = check_stochastic(toy_setup(0.5));
  ASSERT_TRUE(c.certificate && c.certificate->verified);
  const auto q = definition1_bound(*c.certificate);
  VectorXd z0(8);
  z0 << 1, -2, 0.5, 3, 0, 1, -1, 2;
  const double series = z0.squaredNorm() / (1.0 - 0.25);
  EXPECT_LE(series, q.q * z0.squaredNorm() * (1 + 1e-12));
}

TEST(StabilityBound, CorrectedBoundIsScaleInvariant) {
  const auto setup = toy_setup(0.5);
  StochasticCertificate small, large;
  for (auto* c : {&small, &large}) {
    c->G = MatrixXd::Identity(8, 8);
    c->Y = MatrixXd::Zero(2, 8);
  }
  small.X = {MatrixXd::Identity(8, 8)};
  large.X = {0.1 * MatrixXd::Identity(8, 8)};
  large.G = 0.1 * MatrixXd::Identity(8, 8);
  recompute_omega(small, setup);
  recompute_omega(large, setup);
  const auto qs = definition1_bound(small), ql = definition1_bound(large);
  EXPECT_NEAR(qs.q, ql.q, 1e-12);
  EXPECT_NEAR(qs.q, 1.0 / 0.75, 1e-12);
  // The literal 1/λ_min(−Ω) shrinks with W and then undercuts the series.
  EXPECT_LT(ql.q_literal, 1.0 / 0.75);
}

TEST(StabilityBound, RequiresVerifiedCertificate) {
  StochasticCertificate cert;
  EXPECT_THROW(definition1_bound(cert), ContractError);
}
