#include "telestab/discretize.hpp"

#include <array>
#include <cmath>
#include <string>

#include "telestab/errors.hpp"

namespace telestab {
namespace {

using Eigen::MatrixXd;

constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0,
                                          420.0,   30.0,    1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0,
                                          277200.0,   25200.0,   1512.0,
                                          56.0,       1.0};
constexpr std::array<double, 10> kPade9 = {
    17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
    2162160.0,     110880.0,     3960.0,       90.0,        1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

// Backward-error bounds for each degree in double precision.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

double norm1(const MatrixXd& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

template <std::size_t N>
MatrixXd pade_low(const MatrixXd& a, const std::array<double, N>& b) {
  const auto n = a.rows();
  const MatrixXd id = MatrixXd::Identity(n, n);
  const MatrixXd a2 = a * a;
  MatrixXd power = id;
  MatrixXd u = MatrixXd::Zero(n, n);
  MatrixXd v = MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < N; k += 2) {
    v += b[k] * power;
    u += b[k + 1] * power;
    power = power * a2;
  }
  u = a * u;
  return (v - u).partialPivLu().solve(v + u);
}

MatrixXd pade13(const MatrixXd& a) {
  const auto& b = kPade13;
  const auto n = a.rows();
  const MatrixXd id = MatrixXd::Identity(n, n);
  const MatrixXd a2 = a * a;
  const MatrixXd a4 = a2 * a2;
  const MatrixXd a6 = a4 * a2;
  MatrixXd u = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 +
               b[5] * a4 + b[3] * a2 + b[1] * id;
  u = a * u;
  const MatrixXd v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                     b[4] * a4 + b[2] * a2 + b[0] * id;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

MatrixXd matrix_exponential(const MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw ArgumentError("matrix_exponential: matrix must be square, got " +
                        std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()));
  }
  if (m.rows() > 64) throw ArgumentError("matrix_exponential: n > 64");
  if (!m.allFinite()) throw ArgumentError("matrix_exponential: non-finite input");
  if (m.rows() == 0) return m;

  const double nrm = norm1(m);
  if (nrm <= kTheta3) return pade_low(m, kPade3);
  if (nrm <= kTheta5) return pade_low(m, kPade5);
  if (nrm <= kTheta7) return pade_low(m, kPade7);
  if (nrm <= kTheta9) return pade_low(m, kPade9);

  const int s = std::max(0, static_cast<int>(std::ceil(std::log2(nrm / kTheta13))));
  MatrixXd r = pade13(m / std::ldexp(1.0, s));
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

DiscreteModel zoh_discretize(const MatrixXd& A, const MatrixXd& B, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw ArgumentError("zoh_discretize: h must be > 0");
  }
  if (A.rows() != A.cols() || B.rows() != A.rows()) {
    throw ArgumentError("zoh_discretize: dimension mismatch");
  }
  const auto n = A.rows();
  const auto m = B.cols();
  MatrixXd aug = MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = A * h;
  aug.topRightCorner(n, m) = B * h;
  const MatrixXd e = matrix_exponential(aug);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m), h};
}

ExponentialTables::ExponentialTables(const MatrixXd& A, const MatrixXd& B,
                                     std::vector<double> sampling_set,
                                     double h_max, int depth)
    : periods_(std::move(sampling_set)), h_max_(h_max), depth_(depth) {
  if (periods_.empty()) throw ArgumentError("build_tables: empty sampling set");
  if (depth < 1) throw ArgumentError("build_tables: depth must be >= 1");
  for (double h : periods_) {
    const auto d = zoh_discretize(A, B, h);
    phi_.push_back(d.Ad);
    gamma_.push_back(d.Bd);
  }
  const auto b = zoh_discretize(A, B, h_max);
  phi_b_ = b.Ad;
  gamma_b_ = b.Bd;

  const auto n = A.rows();
  powers_.reserve(depth + 1);
  sums_.reserve(depth + 1);
  powers_.push_back(MatrixXd::Identity(n, n));
  sums_.push_back(MatrixXd::Zero(n, B.cols()));
  for (int k = 1; k <= depth; ++k) {
    powers_.push_back(phi_b_ * powers_.back());
    sums_.push_back(phi_b_ * sums_.back() + gamma_b_);
  }
}

std::size_t ExponentialTables::index_of(double h) const {
  for (std::size_t i = 0; i < periods_.size(); ++i) {
    if (std::abs(periods_[i] - h) <= 1e-12 * std::max(1.0, std::abs(h))) return i;
  }
  throw ArgumentError("period " + std::to_string(h) + " not in sampling set");
}

const MatrixXd& ExponentialTables::phi_b_power(int k) const {
  if (k < 0 || k > depth_) {
    throw ArgumentError("phi_b_power: k=" + std::to_string(k) +
                        " outside table depth " + std::to_string(depth_));
  }
  return powers_[k];
}

const MatrixXd& ExponentialTables::geometric_sum(int k) const {
  if (k < 0 || k > depth_) {
    throw ArgumentError("geometric_sum: k=" + std::to_string(k) +
                        " outside table depth " + std::to_string(depth_));
  }
  return sums_[k];
}

ExponentialTables build_tables(const MatrixXd& A, const MatrixXd& B,
                               const std::vector<double>& sampling_set,
                               double h_max, int depth) {
  return ExponentialTables(A, B, sampling_set, h_max, depth);
}

}  // namespace telestab
