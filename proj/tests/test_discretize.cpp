#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "telestab/discretize.hpp"
#include "telestab/errors.hpp"
#include "telestab/model.hpp"

using namespace telestab;
using Eigen::MatrixXd;

namespace {

MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  MatrixXd m(rows.size(), rows.begin()->size());
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

const ContinuousModel kRobot = continuous_matrices(RobotParams(8.4796e-3, 114.6e-6));

}  // namespace

TEST(MatrixExponential, ClosedForms) {
  EXPECT_TRUE(matrix_exponential(MatrixXd::Zero(2, 2)).isApprox(MatrixXd::Identity(2, 2)));
  EXPECT_LT((matrix_exponential(mat({{0, 0.3}, {0, 0}})) - mat({{1, 0.3}, {0, 1}})).norm(),
            1e-15);
  const MatrixXd d = matrix_exponential(mat({{1, 0}, {0, -1}}));
  EXPECT_NEAR(d(0, 0), std::exp(1.0), 1e-15);
  EXPECT_NEAR(d(1, 1), std::exp(-1.0), 1e-16);
  EXPECT_EQ(d(0, 1), 0.0);
}

TEST(MatrixExponential, AgreesWithTaylorOracle) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd;
  for (int n : {2, 3, 6, 9}) {
    MatrixXd m(n, n);
    for (int i = 0; i < n * n; ++i) m.data()[i] = nd(gen);
    EXPECT_LT(oracle::rel_err(matrix_exponential(m), oracle::taylor_exp(m)), 1e-12) << n;
  }
}

TEST(MatrixExponential, InverseIdentity) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    MatrixXd m(2, 2);
    for (int i = 0; i < 4; ++i) m.data()[i] = u(gen);
    const double rho = m.eigenvalues().cwiseAbs().maxCoeff();
    m *= 5.0 * u(gen) / std::max(rho, 1e-12);
    const MatrixXd prod = matrix_exponential(m) * matrix_exponential(-m);
    EXPECT_LT((prod - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(MatrixExponential, Errors) {
  EXPECT_THROW(matrix_exponential(MatrixXd::Zero(2, 3)), ArgumentError);
  MatrixXd bad = MatrixXd::Zero(2, 2);
  bad(0, 0) = std::nan("");
  EXPECT_THROW(matrix_exponential(bad), ArgumentError);
  EXPECT_THROW(matrix_exponential(MatrixXd::Zero(65, 65)), ArgumentError);
}

TEST(Zoh, FixtureAtOneMillisecond) {
  const auto dm = zoh_discretize(kRobot.A, kRobot.B, 1e-3);
  EXPECT_NEAR(dm.Ad(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(dm.Ad(0, 1) / 9.999932e-4, 1.0, 1e-5);
  EXPECT_EQ(dm.Ad(1, 0), 0.0);
  EXPECT_NEAR(dm.Ad(1, 1) / 0.999986, 1.0, 1e-5);
  EXPECT_NEAR(dm.Bd(0) / 5.896478e-5, 1.0, 1e-5);
  EXPECT_NEAR(dm.Bd(1) / 0.117929, 1.0, 1e-5);
}

TEST(Zoh, MatchesTaylorOracle) {
  for (double h : {1e-4, 1e-3, 0.045, 0.21}) {
    MatrixXd ad, bd;
    oracle::taylor_zoh(kRobot.A, kRobot.B, h, ad, bd);
    const auto dm = zoh_discretize(kRobot.A, kRobot.B, h);
    EXPECT_LT(oracle::rel_err(dm.Ad, ad), 1e-13);
    EXPECT_LT(oracle::rel_err(dm.Bd, bd), 1e-13);
  }
}

TEST(Zoh, ZeroDynamicsAndDoubleIntegrator) {
  const MatrixXd B = mat({{0.5}, {-2.0}});
  const auto z = zoh_discretize(MatrixXd::Zero(2, 2), B, 0.3);
  EXPECT_TRUE(z.Ad.isApprox(MatrixXd::Identity(2, 2)));
  EXPECT_LT((z.Bd - 0.3 * B).norm(), 1e-15);

  const double m = 0.7, h = 0.05;
  const auto cm = continuous_matrices(RobotParams(m, 0.0));
  const auto di = zoh_discretize(cm.A, cm.B, h);
  EXPECT_LT((di.Ad - mat({{1, h}, {0, 1}})).norm(), 1e-15);
  EXPECT_NEAR(di.Bd(0), h * h / (2 * m), 1e-16);
  EXPECT_NEAR(di.Bd(1), h / m, 1e-15);
}

TEST(Zoh, Semigroup) {
  for (auto [h1, h2] : {std::pair{0.01, 0.02}, {0.045, 0.21}, {1e-3, 0.3}}) {
    const auto a = zoh_discretize(kRobot.A, kRobot.B, h1);
    const auto b = zoh_discretize(kRobot.A, kRobot.B, h2);
    const auto c = zoh_discretize(kRobot.A, kRobot.B, h1 + h2);
    EXPECT_LT((c.Ad - b.Ad * a.Ad).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((c.Bd - (b.Ad * a.Bd + b.Bd)).cwiseAbs().maxCoeff() / c.Bd.norm(), 1e-10);
  }
}

TEST(Zoh, FiniteDifferenceDerivative) {
  const double h = 0.02, eps = 1e-7;
  const auto a = zoh_discretize(kRobot.A, kRobot.B, h);
  const auto b = zoh_discretize(kRobot.A, kRobot.B, h + eps);
  const MatrixXd fd = (b.Ad - a.Ad) / eps;
  EXPECT_LT((fd - kRobot.A * a.Ad).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Zoh, SmallStepLimit) {
  const auto dm = zoh_discretize(kRobot.A, kRobot.B, 1e-12);
  EXPECT_LT((dm.Ad - MatrixXd::Identity(2, 2)).norm(), 1e-11);
  EXPECT_LT(dm.Bd.norm(), 1e-9);
}

TEST(Zoh, RejectsNonPositivePeriod) {
  EXPECT_THROW(zoh_discretize(kRobot.A, kRobot.B, 0.0), ArgumentError);
  EXPECT_THROW(zoh_discretize(kRobot.A, kRobot.B, -1e-3), ArgumentError);
}

TEST(Tables, DepthOneBaseCase) {
  const auto t = build_tables(kRobot.A, kRobot.B, {0.045, 0.09}, 0.09, 1);
  EXPECT_TRUE(t.phi_b_power(0).isApprox(MatrixXd::Identity(2, 2)));
  EXPECT_TRUE(t.phi_b_power(1).isApprox(t.phi_b()));
  EXPECT_EQ(t.geometric_sum(0).norm(), 0.0);
  EXPECT_TRUE(t.geometric_sum(1).isApprox(t.gamma_b()));
  EXPECT_THROW(t.phi_b_power(2), ArgumentError);
}

TEST(Tables, SumsAndPowersAgainstDirectComputation) {
  const double hb = 0.21;
  const auto t = build_tables(kRobot.A, kRobot.B, {0.045, 0.09, 0.21}, hb, 3);
  const MatrixXd s2 = t.phi_b() * t.gamma_b() + t.gamma_b();
  EXPECT_LT((t.geometric_sum(2) - s2).cwiseAbs().maxCoeff() / s2.norm(), 1e-14);
  const MatrixXd p3 = matrix_exponential(3.0 * hb * kRobot.A);
  EXPECT_LT((t.phi_b_power(3) - p3).cwiseAbs().maxCoeff(), 1e-10);
  for (int k = 1; k < 3; ++k)
    EXPECT_LT((t.geometric_sum(k + 1) - (t.phi_b() * t.geometric_sum(k) + t.gamma_b()))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-14);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto dm = zoh_discretize(kRobot.A, kRobot.B, t.period(i));
    EXPECT_EQ(t.phi(i), dm.Ad);
    EXPECT_EQ(t.gamma(i), dm.Bd);
  }
  EXPECT_EQ(t.index_of(0.09), 1u);
  EXPECT_THROW(t.index_of(0.1), ArgumentError);
}

TEST(Tables, Errors) {
  EXPECT_THROW(build_tables(kRobot.A, kRobot.B, {}, 0.1, 1), ArgumentError);
  EXPECT_THROW(build_tables(kRobot.A, kRobot.B, {0.1, -0.1}, 0.1, 1), ArgumentError);
  EXPECT_THROW(build_tables(kRobot.A, kRobot.B, {0.1}, 0.1, 0), ArgumentError);
}
