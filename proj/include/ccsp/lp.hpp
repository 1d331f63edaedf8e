#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <memory>

#include "ccsp/operators.hpp"

namespace ccsp {

/// min c.x subject to a*x <= b, x free.
struct LinearProgram {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

/// Primal-dual pair from the reference solver: x primal, y >= 0 dual with
/// a^T y = -c, slack = b - a x.
struct LpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd slack;
  double objective = 0.0;
  bool optimal = false;
  std::int64_t iterations = 0;
};

/// Dense two-phase simplex on the dual standard form; Dantzig pricing
/// with a Bland fallback against cycling. Intended as the small-scale
/// exact reference, independent of the fixed-point path.
LpSolution solve_lp_reference(const LinearProgram& lp);

/// Fixed-point system operator for an LP, built from its primal-dual
/// optimality conditions. The state z = (x, s, y) carries primal
/// variables, slacks and duals; U is the affine set {a x + s = b,
/// a^T y = -c, c.x + b.y = 0} and C the cone {s >= 0, y >= 0}. The
/// operator reflects across U, then across C; both reflections are
/// nonexpansive, so T is passive everywhere, and the projection of any
/// fixed point onto U is an optimal primal-dual pair.
class LpOperator {
 public:
  explicit LpOperator(LinearProgram lp);

  const SystemOperator& op() const { return op_; }
  const LinearProgram& lp() const;
  Eigen::Index num_vars() const;    // n
  Eigen::Index num_rows() const;    // m
  Eigen::Index state_dim() const;   // n + 2m

  Eigen::VectorXd project_affine(const Eigen::VectorXd& z) const;
  /// LP variables decoded from a state: the x-part of its projection
  /// onto U. At a fixed point this is an optimal primal solution.
  Eigen::VectorXd decode(const Eigen::VectorXd& z) const;
  Eigen::VectorXd embed(const Eigen::VectorXd& x, const Eigen::VectorXd& s,
                        const Eigen::VectorXd& y) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  SystemOperator op_;
};

}  // namespace ccsp
