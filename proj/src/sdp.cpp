#include "telestab/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include "telestab/errors.hpp"

namespace telestab::sdp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_symmetric(const MatrixXd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

// Scalar parametrization of one variable block.
struct ScalarSlot {
  int var;
  int i;
  int j;  // i <= j for symmetric blocks
};

std::vector<ScalarSlot> scalar_slots(const LmiSystem& sys,
                                     std::vector<int>& offsets) {
  std::vector<ScalarSlot> slots;
  offsets.clear();
  const auto& vars = sys.variables();
  for (int v = 0; v < static_cast<int>(vars.size()); ++v) {
    offsets.push_back(static_cast<int>(slots.size()));
    const auto& b = vars[v];
    if (b.structure == Structure::kSymmetric) {
      for (int j = 0; j < b.cols; ++j)
        for (int i = 0; i <= j; ++i) slots.push_back({v, i, j});
    } else {
      for (int j = 0; j < b.cols; ++j)
        for (int i = 0; i < b.rows; ++i) slots.push_back({v, i, j});
    }
  }
  return slots;
}

Assignment unpack(const LmiSystem& sys, const std::vector<ScalarSlot>& slots,
                  const VectorXd& x) {
  Assignment out;
  for (const auto& b : sys.variables()) out.push_back(MatrixXd::Zero(b.rows, b.cols));
  for (int k = 0; k < static_cast<int>(slots.size()); ++k) {
    const auto& s = slots[k];
    out[s.var](s.i, s.j) = x[k];
    if (sys.variables()[s.var].structure == Structure::kSymmetric)
      out[s.var](s.j, s.i) = x[k];
  }
  return out;
}

// One constraint in "≻ 0" form: C + Σ_k y_k A_k. Each A_k is also kept as a
// sum of rank-two pieces coef·(u vᵀ + v uᵀ) over the columns of `vecs`.
struct Piece {
  double coef;
  int u;
  int v;
};

struct Block {
  int n = 0;
  MatrixXd C;
  std::vector<int> index;
  std::vector<MatrixXd> A;
  MatrixXd vecs;
  std::vector<std::vector<Piece>> pieces;
};

MatrixXd dense_from(const std::vector<Piece>& pieces, const MatrixXd& vecs) {
  MatrixXd a = MatrixXd::Zero(vecs.rows(), vecs.rows());
  for (const auto& p : pieces) {
    a.noalias() += p.coef * vecs.col(p.u) * vecs.col(p.v).transpose();
    a.noalias() += p.coef * vecs.col(p.v) * vecs.col(p.u).transpose();
  }
  return a;
}

// Raw sign-corrected coefficient matrices for every constraint, including the
// implicit positivity ones.
std::vector<Block> assemble_blocks(const LmiSystem& sys,
                                   const std::vector<ScalarSlot>& slots,
                                   const std::vector<int>& offsets) {
  std::vector<Block> blocks;
  const int total = static_cast<int>(slots.size());
  auto finish = [&](Block& b, std::vector<std::vector<Piece>>& raw,
                    double sign) {
    b.C *= sign;
    for (int k = 0; k < total; ++k) {
      if (raw[k].empty()) continue;
      for (auto& p : raw[k]) p.coef *= sign;
      MatrixXd a = dense_from(raw[k], b.vecs);
      if (a.cwiseAbs().maxCoeff() == 0.0) continue;
      b.index.push_back(k);
      b.A.push_back(std::move(a));
      b.pieces.push_back(std::move(raw[k]));
    }
  };

  for (const auto& c : sys.constraints()) {
    Block b;
    b.n = c.size();
    b.C = c.constant();
    std::vector<VectorXd> vecs;
    // Column `col` of the left factor (side 0) or of the right factor's
    // transpose (side 1), embedded at the term's row or column offset.
    auto embed = [&](const Term& t, int side, int col) {
      VectorXd e = VectorXd::Zero(b.n);
      if (side == 0)
        e.segment(t.row, t.left.rows()) = t.left.col(col);
      else
        e.segment(t.col, t.right.cols()) = t.right.row(col).transpose();
      vecs.push_back(std::move(e));
      return static_cast<int>(vecs.size()) - 1;
    };
    std::vector<std::vector<Piece>> raw(total);
    for (const auto& t : c.terms()) {
      const auto& var = sys.variables()[t.var.index];
      const bool sym = var.structure == Structure::kSymmetric;
      std::vector<int> lu, rv;
      for (int i = 0; i < var.rows; ++i) lu.push_back(embed(t, 0, i));
      if (t.mirror)
        for (int j = 0; j < var.cols; ++j) rv.push_back(embed(t, 1, j));
      const int base = offsets[t.var.index];
      const int count = sym ? var.rows * (var.rows + 1) / 2 : var.rows * var.cols;
      for (int k = base; k < base + count; ++k) {
        const auto& s = slots[k];
        if (!t.mirror) {
          raw[k].push_back({s.i == s.j ? 0.5 * t.coef : t.coef, lu[s.i], lu[s.j]});
          continue;
        }
        raw[k].push_back({t.coef, lu[s.i], rv[s.j]});
        if (sym && s.i != s.j) raw[k].push_back({t.coef, lu[s.j], rv[s.i]});
      }
    }
    b.vecs.resize(b.n, static_cast<Eigen::Index>(vecs.size()));
    for (std::size_t v = 0; v < vecs.size(); ++v) b.vecs.col(v) = vecs[v];
    finish(b, raw, c.sense() == Sense::kNegativeDefinite ? -1.0 : 1.0);
    blocks.push_back(std::move(b));
  }

  for (int v = 0; v < static_cast<int>(sys.variables().size()); ++v) {
    const auto& var = sys.variables()[v];
    if (!var.positive) continue;
    Block b;
    b.n = var.rows;
    b.C = MatrixXd::Zero(b.n, b.n);
    b.vecs = MatrixXd::Identity(b.n, b.n);
    std::vector<std::vector<Piece>> raw(total);
    const int count = var.rows * (var.rows + 1) / 2;
    for (int k = offsets[v]; k < offsets[v] + count; ++k) {
      const auto& s = slots[k];
      raw[k].push_back({s.i == s.j ? 0.5 : 1.0, s.i, s.j});
    }
    finish(b, raw, 1.0);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

// Diagonal congruence per block, then per-variable scaling. Returns the
// variable scale v so that x = v ∘ y.
VectorXd precondition(std::vector<Block>& blocks, int total) {
  for (auto& b : blocks) {
    VectorXd mag = b.C.cwiseAbs().rowwise().maxCoeff();
    for (const auto& a : b.A)
      mag = mag.cwiseMax(a.cwiseAbs().rowwise().maxCoeff());
    VectorXd d(b.n);
    for (int r = 0; r < b.n; ++r) d[r] = mag[r] > 0 ? 1.0 / std::sqrt(mag[r]) : 1.0;
    b.C = d.asDiagonal() * b.C * d.asDiagonal();
    for (auto& a : b.A) a = d.asDiagonal() * a * d.asDiagonal();
    b.vecs = d.asDiagonal() * b.vecs;
  }
  VectorXd scale = VectorXd::Zero(total);
  for (const auto& b : blocks)
    for (std::size_t q = 0; q < b.A.size(); ++q)
      scale[b.index[q]] = std::max(scale[b.index[q]], b.A[q].cwiseAbs().maxCoeff());
  for (int k = 0; k < total; ++k) scale[k] = scale[k] > 0 ? 1.0 / scale[k] : 1.0;
  for (auto& b : blocks)
    for (std::size_t q = 0; q < b.A.size(); ++q) {
      b.A[q] *= scale[b.index[q]];
      for (auto& p : b.pieces[q]) p.coef *= scale[b.index[q]];
    }
  return scale;
}

MatrixXd slack_matrix(const Block& b, const VectorXd& y, double t) {
  MatrixXd s = b.C;
  for (std::size_t q = 0; q < b.A.size(); ++q) s += y[b.index[q]] * b.A[q];
  s.diagonal().array() -= t;
  return s;
}

// Barrier path-following on  max t  s.t.  C_c + Σ y_k A_ck − tI ≻ 0, ‖y‖ < R.
class BarrierSolver {
 public:
  BarrierSolver(std::vector<Block> blocks, int total, double radius)
      : blocks_(std::move(blocks)), total_(total), radius_(radius) {}

  struct Point {
    VectorXd y;
    double t;
  };

  // Barrier value, or +inf outside the domain.
  double value(const Point& p, double rho) const {
    const double ball = radius_ * radius_ - p.y.squaredNorm();
    if (!(ball > 0)) return kInf;
    double f = -rho * p.t - std::log(ball);
    for (const auto& b : blocks_) {
      Eigen::LLT<MatrixXd> llt(slack_matrix(b, p.y, p.t));
      if (llt.info() != Eigen::Success) return kInf;
      const auto diag = llt.matrixLLT().diagonal();
      for (int r = 0; r < b.n; ++r) {
        if (!(diag[r] > 0)) return kInf;
        f -= 2.0 * std::log(diag[r]);
      }
    }
    return std::isfinite(f) ? f : kInf;
  }

  // Gradient and Hessian over (y, t); also the dual bound implied by S⁻¹.
  bool derivatives(const Point& p, double rho, VectorXd& g, MatrixXd& H,
                   double& dual) const {
    const int m = total_ + 1;
    inverses_.clear();
    g = VectorXd::Zero(m);
    H = MatrixXd::Zero(m, m);
    VectorXd a = VectorXd::Zero(total_);
    double inner = 0.0;
    double trace = 0.0;
    for (const auto& b : blocks_) {
      MatrixXd s = slack_matrix(b, p.y, p.t);
      Eigen::LLT<MatrixXd> llt(s);
      if (llt.info() != Eigen::Success) return false;
      MatrixXd sinv = llt.solve(MatrixXd::Identity(b.n, b.n));
      sinv = 0.5 * (sinv + sinv.transpose());
      // Gram matrices K = Vᵀ S⁻¹ V and K2 = Vᵀ S⁻² V give every trace below.
      const MatrixXd z = sinv * b.vecs;
      const MatrixXd K = b.vecs.transpose() * z;
      const MatrixXd K2 = z.transpose() * z;
      const int k = static_cast<int>(b.A.size());
      for (int q = 0; q < k; ++q) {
        double tr = 0.0, tr2 = 0.0;
        for (const auto& pc : b.pieces[q]) {
          tr += 2.0 * pc.coef * K(pc.u, pc.v);
          tr2 += 2.0 * pc.coef * K2(pc.u, pc.v);
        }
        const int iq = b.index[q];
        g[iq] -= tr;
        a[iq] += tr;
        H(iq, total_) -= tr2;
        H(total_, iq) -= tr2;
        for (int r = q; r < k; ++r) {
          double h = 0.0;
          for (const auto& p1 : b.pieces[q])
            for (const auto& p2 : b.pieces[r])
              h += p1.coef * p2.coef *
                   (K(p1.v, p2.u) * K(p2.v, p1.u) + K(p1.v, p2.v) * K(p2.u, p1.u) +
                    K(p1.u, p2.u) * K(p2.v, p1.v) + K(p1.u, p2.v) * K(p2.u, p1.v));
          const int ir = b.index[r];
          H(iq, ir) += h;
          if (r != q) H(ir, iq) += h;
        }
      }
      const double tr = sinv.trace();
      g[total_] += tr;
      H(total_, total_) += sinv.squaredNorm();
      trace += tr;
      inner += (b.C.array() * sinv.array()).sum();
      inverses_.push_back(std::move(sinv));
    }
    g[total_] -= rho;
    const double ball = radius_ * radius_ - p.y.squaredNorm();
    g.head(total_) += 2.0 * p.y / ball;
    H.topLeftCorner(total_, total_) +=
        (2.0 / ball) * MatrixXd::Identity(total_, total_) +
        (4.0 / (ball * ball)) * p.y * p.y.transpose();
    dual = trace > 0 ? (inner + radius_ * a.norm()) / trace : kInf;
    return g.allFinite() && H.allFinite();
  }

  // Upper bound on the optimal t from the Newton-corrected dual
  // Z = S⁻¹ − S⁻¹ΔS S⁻¹, shifted to be positive semidefinite. Uses the
  // inverses cached by the last derivatives() call.
  double corrected_dual(const VectorXd& step) const {
    VectorXd a = VectorXd::Zero(total_);
    double inner = 0.0;
    double trace = 0.0;
    for (std::size_t c = 0; c < blocks_.size(); ++c) {
      const auto& b = blocks_[c];
      const MatrixXd& sinv = inverses_[c];
      MatrixXd ds = MatrixXd::Zero(b.n, b.n);
      for (std::size_t q = 0; q < b.A.size(); ++q) ds += step[b.index[q]] * b.A[q];
      ds.diagonal().array() -= step[total_];
      MatrixXd z = sinv - sinv * ds * sinv;
      z = 0.5 * (z + z.transpose());
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(z, Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues().minCoeff();
      if (!std::isfinite(lo)) return kInf;
      if (lo < 0) z.diagonal().array() -= lo;
      for (std::size_t q = 0; q < b.A.size(); ++q)
        a[b.index[q]] += (b.A[q].array() * z.array()).sum();
      inner += (b.C.array() * z.array()).sum();
      trace += z.trace();
    }
    return trace > 0 ? (inner + radius_ * a.norm()) / trace : kInf;
  }

  Point start() const {
    Point p{VectorXd::Zero(total_), 0.0};
    double lo = kInf;
    for (const auto& b : blocks_) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(b.C, Eigen::EigenvaluesOnly);
      lo = std::min(lo, es.eigenvalues().minCoeff());
    }
    p.t = lo - 1.0;
    return p;
  }

 private:
  std::vector<Block> blocks_;
  int total_;
  double radius_;
  mutable std::vector<MatrixXd> inverses_;
};

}  // namespace

Constraint::Constraint(std::string name, int size, Sense sense)
    : name_(std::move(name)), size_(size), sense_(sense) {
  if (size <= 0) throw StructuralError("constraint '" + name_ + "' has size <= 0");
  constant_ = MatrixXd::Zero(size, size);
}

Constraint& Constraint::add(double coef, const MatrixXd& left, VarId var,
                            const MatrixXd& right, int row, int col) {
  terms_.push_back({coef, left, var, right, row, col, true});
  return *this;
}

Constraint& Constraint::add_congruence(double coef, const MatrixXd& left,
                                       VarId var, int row) {
  terms_.push_back({coef, left, var, left.transpose(), row, row, false});
  return *this;
}

Constraint& Constraint::set_constant(const MatrixXd& constant) {
  if (constant.rows() != size_ || constant.cols() != size_)
    throw StructuralError("constant of constraint '" + name_ + "' has wrong size");
  constant_ = constant;
  return *this;
}

VarId LmiSystem::add_variable(std::string name, int rows, int cols,
                              Structure structure, bool positive) {
  if (rows <= 0 || cols <= 0)
    throw StructuralError("variable '" + name + "' has non-positive size");
  if (structure == Structure::kSymmetric && rows != cols)
    throw StructuralError("symmetric variable '" + name + "' must be square");
  if (positive && structure != Structure::kSymmetric)
    throw StructuralError("positive variable '" + name + "' must be symmetric");
  for (const auto& v : variables_)
    if (v.name == name) throw StructuralError("duplicate variable '" + name + "'");
  variables_.push_back({std::move(name), rows, cols, structure, positive});
  return VarId{static_cast<int>(variables_.size()) - 1};
}

Constraint& LmiSystem::add_constraint(std::string name, int size, Sense sense) {
  constraints_.emplace_back(std::move(name), size, sense);
  return constraints_.back();
}

const VariableBlock& LmiSystem::variable(VarId id) const {
  if (id.index < 0 || id.index >= static_cast<int>(variables_.size()))
    throw StructuralError("unknown variable id " + std::to_string(id.index));
  return variables_[id.index];
}

VarId LmiSystem::find(const std::string& name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i].name == name) return VarId{static_cast<int>(i)};
  throw StructuralError("unknown variable '" + name + "'");
}

int LmiSystem::scalar_count() const {
  int n = 0;
  for (const auto& v : variables_)
    n += v.structure == Structure::kSymmetric ? v.rows * (v.rows + 1) / 2
                                              : v.rows * v.cols;
  return n;
}

bool LmiSystem::homogeneous() const {
  for (const auto& c : constraints_)
    if (c.constant().cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

void LmiSystem::validate() const {
  for (const auto& c : constraints_) {
    const std::string where = "constraint '" + c.name() + "': ";
    if (!c.constant().allFinite() || !is_symmetric(c.constant()))
      throw StructuralError(where + "constant term is not symmetric and finite");
    for (const auto& t : c.terms()) {
      const auto& var = variable(t.var);
      if (!std::isfinite(t.coef) || !t.left.allFinite() || !t.right.allFinite())
        throw StructuralError(where + "non-finite coefficient");
      if (t.left.cols() != var.rows || t.right.rows() != var.cols)
        throw StructuralError(where + "factor dimensions do not match '" +
                              var.name + "'");
      if (t.row < 0 || t.col < 0 || t.row + t.left.rows() > c.size() ||
          t.col + t.right.cols() > c.size())
        throw StructuralError(where + "term block out of range");
      if (!t.mirror) {
        if (var.structure != Structure::kSymmetric || t.row != t.col ||
            t.left.rows() != t.right.cols() ||
            !(t.left - t.right.transpose()).isZero(0.0))
          throw StructuralError(where + "unmirrored term must be a congruence "
                                        "of a symmetric variable");
      }
    }
  }
}

MatrixXd LmiSystem::evaluate(std::size_t index, const Assignment& values) const {
  if (values.size() != variables_.size())
    throw StructuralError("assignment has " + std::to_string(values.size()) +
                          " blocks, system has " +
                          std::to_string(variables_.size()));
  for (std::size_t v = 0; v < variables_.size(); ++v)
    if (values[v].rows() != variables_[v].rows ||
        values[v].cols() != variables_[v].cols)
      throw StructuralError("assignment for '" + variables_[v].name +
                            "' is missing or has the wrong shape");
  const auto& c = constraints_.at(index);
  MatrixXd f = c.constant();
  for (const auto& t : c.terms()) {
    MatrixXd block = t.coef * t.left * values[t.var.index] * t.right;
    f.block(t.row, t.col, block.rows(), block.cols()) += block;
    if (t.mirror)
      f.block(t.col, t.row, block.cols(), block.rows()) += block.transpose();
  }
  return 0.5 * (f + f.transpose());
}

std::string LmiSystem::dump() const {
  std::ostringstream os;
  os << std::setprecision(17);
  auto matrix = [&](const char* label, const MatrixXd& m) {
    os << "    " << label << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      os << "     ";
      for (Eigen::Index c = 0; c < m.cols(); ++c) os << ' ' << m(r, c);
      os << '\n';
    }
  };
  for (const auto& v : variables_)
    os << "variable " << v.name << ' ' << v.rows << ' ' << v.cols << ' '
       << (v.structure == Structure::kSymmetric ? "symmetric" : "full")
       << (v.positive ? " positive" : "") << '\n';
  for (const auto& c : constraints_) {
    os << "constraint " << c.name() << ' ' << c.size() << ' '
       << (c.sense() == Sense::kNegativeDefinite ? "negative" : "positive")
       << '\n';
    matrix("constant", c.constant());
    for (const auto& t : c.terms()) {
      os << "  term " << variables_.at(t.var.index).name << " coef " << t.coef
         << " at " << t.row << ' ' << t.col
         << (t.mirror ? " mirrored" : " congruence") << '\n';
      matrix("left", t.left);
      matrix("right", t.right);
    }
  }
  return os.str();
}

const char* to_string(Status status) {
  switch (status) {
    case Status::kFeasible: return "feasible";
    case Status::kInfeasible: return "infeasible";
    case Status::kIndeterminate: return "indeterminate";
  }
  return "unknown";
}

std::vector<Margin> verify_certificate(const LmiSystem& sys,
                                       const Assignment& values) {
  std::vector<Margin> out;
  for (std::size_t i = 0; i < sys.constraints().size(); ++i) {
    const auto& c = sys.constraints()[i];
    MatrixXd f = sys.evaluate(i, values);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(f, Eigen::EigenvaluesOnly);
    Margin m;
    m.name = c.name();
    m.sense = c.sense();
    if (c.sense() == Sense::kNegativeDefinite) {
      m.eigenvalue = es.eigenvalues().maxCoeff();
      m.slack = -m.eigenvalue;
    } else {
      m.eigenvalue = es.eigenvalues().minCoeff();
      m.slack = m.eigenvalue;
    }
    out.push_back(m);
  }
  for (std::size_t v = 0; v < sys.variables().size(); ++v) {
    const auto& var = sys.variables()[v];
    if (!var.positive) continue;
    MatrixXd x = 0.5 * (values[v] + values[v].transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(x, Eigen::EigenvaluesOnly);
    Margin m;
    m.name = var.name + " > 0";
    m.sense = Sense::kPositiveDefinite;
    m.eigenvalue = es.eigenvalues().minCoeff();
    m.slack = m.eigenvalue;
    out.push_back(m);
  }
  return out;
}

double min_slack(const std::vector<Margin>& margins) {
  double s = kInf;
  for (const auto& m : margins) s = std::min(s, m.slack);
  return s;
}

FeasibilityResult check_feasible(const LmiSystem& sys,
                                 const SolverOptions& options) {
  if (!(options.tol > 0)) throw ArgumentError("tol must be positive");
  sys.validate();
  if (sys.constraints().empty() && sys.variables().empty())
    throw StructuralError("empty system");

  std::vector<int> offsets;
  const auto slots = scalar_slots(sys, offsets);
  const int total = static_cast<int>(slots.size());
  if (total > 4000) throw StructuralError("too many scalar variables");

  const bool homogeneous = sys.homogeneous();
  const double radius =
      options.ball_radius > 0 ? options.ball_radius : (homogeneous ? 1.0 : 1e4);

  auto blocks = assemble_blocks(sys, slots, offsets);
  const VectorXd scale = precondition(blocks, total);
  BarrierSolver solver(std::move(blocks), total, radius);

  FeasibilityResult result;
  result.dual_bound = kInf;
  result.normalized_margin = -kInf;
  VectorXd best_x = VectorXd::Zero(total);

  // Candidate check on the original, unscaled system.
  auto accept = [&](const VectorXd& y) -> bool {
    VectorXd x = scale.cwiseProduct(y);
    Assignment values = unpack(sys, slots, x);
    double slack = min_slack(verify_certificate(sys, values));
    if (!(slack > 0)) return false;
    if (homogeneous && slack < options.tol) {
      x *= 2.0 * options.tol / slack;
      values = unpack(sys, slots, x);
      slack = min_slack(verify_certificate(sys, values));
    }
    if (!(slack >= options.tol)) return false;
    result.status = Status::kFeasible;
    result.assignment = std::move(values);
    result.margin = slack;
    return true;
  };

  const double threshold = homogeneous ? options.infeasibility_bound : 0.0;
  BarrierSolver::Point p = solver.start();
  double rho = 1.0;
  VectorXd g;
  MatrixXd H;
  bool stalled = false;

  while (rho <= options.rho_max && !stalled &&
         result.newton_steps < options.max_newton_steps) {
    for (int inner = 0; inner < 60; ++inner) {
      if (result.newton_steps >= options.max_newton_steps) break;
      double dual = kInf;
      if (!solver.derivatives(p, rho, g, H, dual)) {
        stalled = true;
        break;
      }
      result.dual_bound = std::min(result.dual_bound, dual);
      if (result.dual_bound < threshold) {
        result.status = Status::kInfeasible;
        break;
      }

      Eigen::LDLT<MatrixXd> ldlt(H);
      VectorXd step = ldlt.solve(-g);
      step += ldlt.solve(-g - H * step);
      if (ldlt.info() != Eigen::Success || !step.allFinite()) {
        stalled = true;
        break;
      }
      result.dual_bound =
          std::min(result.dual_bound, solver.corrected_dual(step));
      if (result.dual_bound < threshold) {
        result.status = Status::kInfeasible;
        break;
      }
      const double decrement = -g.dot(step);
      if (decrement < 1e-10) break;

      const double f0 = solver.value(p, rho);
      double alpha = 1.0;
      BarrierSolver::Point q = p;
      while (true) {
        q.y = p.y + alpha * step.head(total);
        q.t = p.t + alpha * step[total];
        const double f1 = solver.value(q, rho);
        if (f1 <= f0 - 0.25 * alpha * decrement) break;
        alpha *= 0.5;
        if (alpha < 1e-14) break;
      }
      ++result.newton_steps;
      if (alpha < 1e-14) {
        stalled = true;
        break;
      }
      p = q;
      if (p.t > result.normalized_margin) {
        result.normalized_margin = p.t;
        best_x = scale.cwiseProduct(p.y);
      }
      if (p.t > options.min_normalized_margin && accept(p.y)) return result;
      if (decrement < 1e-9) break;
    }
    if (result.status == Status::kInfeasible) break;
    rho *= 8.0;
  }

  spdlog::debug("sdp: stopped after {} steps, rho={:g}, stalled={}, t={:g}, dual={:g}",
                result.newton_steps, rho, stalled, p.t, result.dual_bound);
  result.assignment = unpack(sys, slots, best_x);
  result.margin = min_slack(verify_certificate(sys, result.assignment));
  if (result.status != Status::kInfeasible) result.status = Status::kIndeterminate;
  return result;
}

}  // namespace telestab::sdp
