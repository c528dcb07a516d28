#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace telestab {

// exp(M) by scaling and squaring with a degree 3..13 Padé approximant
// (Higham 2005). Throws ArgumentError for non-square or non-finite input, or
// when n > 64.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& m);

struct DiscreteModel {
  Eigen::MatrixXd Ad;  // e^{Ah}
  Eigen::MatrixXd Bd;  // ∫₀ʰ e^{As} ds · B
  double h = 0.0;
};

DiscreteModel zoh_discretize(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                             double h);

// ZOH maps for every sampling period in a finite set, plus the h_max powers
// Φ_b^k and geometric sums S_k = Σ_{i<k} Φ_b^i Γ_b for k = 0..depth.
class ExponentialTables {
 public:
  ExponentialTables(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                    std::vector<double> sampling_set, double h_max,
                    int depth);

  std::size_t size() const { return periods_.size(); }
  int depth() const { return depth_; }
  double period(std::size_t i) const { return periods_.at(i); }
  const std::vector<double>& periods() const { return periods_; }
  double h_max() const { return h_max_; }
  // Index of `h` in the sampling set (relative match 1e-12); throws if absent.
  std::size_t index_of(double h) const;

  const Eigen::MatrixXd& phi(std::size_t i) const { return phi_.at(i); }
  const Eigen::MatrixXd& gamma(std::size_t i) const { return gamma_.at(i); }
  const Eigen::MatrixXd& phi_b() const { return phi_b_; }
  const Eigen::MatrixXd& gamma_b() const { return gamma_b_; }
  // Φ_b^k, 0 <= k <= depth.
  const Eigen::MatrixXd& phi_b_power(int k) const;
  // S_k, 0 <= k <= depth; S_0 = 0, S_1 = Γ_b.
  const Eigen::MatrixXd& geometric_sum(int k) const;

 private:
  std::vector<double> periods_;
  double h_max_;
  int depth_;
  std::vector<Eigen::MatrixXd> phi_, gamma_;
  Eigen::MatrixXd phi_b_, gamma_b_;
  std::vector<Eigen::MatrixXd> powers_, sums_;
};

ExponentialTables build_tables(const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& B,
                               const std::vector<double>& sampling_set,
                               double h_max, int depth);

}  // namespace telestab
