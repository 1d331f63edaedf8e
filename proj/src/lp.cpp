#include "ccsp/lp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ccsp {

namespace {

// Two-phase tableau simplex for: min g.y  s.t.  e y = h, y >= 0.
// Returns the optimal y and the equality multipliers pi (e_B^T pi = g_B).
struct StandardResult {
  Eigen::VectorXd y;
  Eigen::VectorXd pi;
  bool optimal = false;
  std::int64_t iterations = 0;
};

StandardResult solve_standard(const Eigen::MatrixXd& e_in,
                              const Eigen::VectorXd& h_in,
                              const Eigen::VectorXd& g) {
  const Eigen::Index nr = e_in.rows();
  const Eigen::Index nc = e_in.cols();
  StandardResult res;

  Eigen::MatrixXd e = e_in;
  Eigen::VectorXd h = h_in;
  for (Eigen::Index i = 0; i < nr; ++i) {
    if (h[i] < 0.0) {
      e.row(i) = -e.row(i);
      h[i] = -h[i];
    }
  }

  // Tableau: [e | I | h], basis starts on the artificial block.
  const Eigen::Index total = nc + nr;
  Eigen::MatrixXd tab(nr, total + 1);
  tab.leftCols(nc) = e;
  tab.middleCols(nc, nr) = Eigen::MatrixXd::Identity(nr, nr);
  tab.col(total) = h;
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(nr));
  for (Eigen::Index i = 0; i < nr; ++i) basis[static_cast<std::size_t>(i)] = nc + i;

  // Cost rows kept in reduced form: phase-1 (artificial sum) and phase-2.
  Eigen::RowVectorXd cost1 = Eigen::RowVectorXd::Zero(total + 1);
  for (Eigen::Index j = 0; j < nr; ++j) cost1 -= tab.row(j);
  cost1.segment(nc, nr).setZero();
  Eigen::RowVectorXd cost2 = Eigen::RowVectorXd::Zero(total + 1);
  cost2.head(nc) = g.transpose();

  const double tol = 1e-9;
  const std::int64_t max_iters = 200000;
  const std::int64_t bland_after = 4 * total;

  auto pivot = [&](Eigen::Index row, Eigen::Index col) {
    tab.row(row) /= tab(row, col);
    for (Eigen::Index i = 0; i < nr; ++i) {
      if (i == row) continue;
      const double f = tab(i, col);
      if (f != 0.0) tab.row(i) -= f * tab.row(row);
    }
    const double f1 = cost1[col];
    if (f1 != 0.0) cost1 -= f1 * tab.row(row);
    const double f2 = cost2[col];
    if (f2 != 0.0) cost2 -= f2 * tab.row(row);
    basis[static_cast<std::size_t>(row)] = col;
  };

  auto iterate = [&](Eigen::RowVectorXd& cost, Eigen::Index eligible,
                     bool forbid_artificial) -> bool {
    while (true) {
      if (res.iterations > max_iters) return false;
      const bool bland = res.iterations > bland_after;
      Eigen::Index enter = -1;
      double best = -tol;
      for (Eigen::Index j = 0; j < eligible; ++j) {
        if (forbid_artificial && j >= nc) continue;
        const double rc = cost[j];
        if (rc < best) {
          enter = j;
          if (bland) break;
          best = rc;
        }
      }
      if (enter < 0) return true;  // optimal for this phase

      Eigen::Index leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < nr; ++i) {
        const double aij = tab(i, enter);
        if (aij > tol) {
          const double ratio = tab(i, total) / aij;
          if (ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 && leave >= 0 &&
               basis[static_cast<std::size_t>(i)] <
                   basis[static_cast<std::size_t>(leave)])) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return false;  // unbounded phase objective
      pivot(leave, enter);
      ++res.iterations;
    }
  };

  // Phase 1: drive the artificial objective to zero.
  if (!iterate(cost1, total, false)) return res;
  if (-cost1[total] > 1e-7 * (1.0 + h.cwiseAbs().maxCoeff())) return res;

  // Pivot any artificial variable still basic onto a structural column.
  for (Eigen::Index i = 0; i < nr; ++i) {
    if (basis[static_cast<std::size_t>(i)] >= nc) {
      Eigen::Index col = -1;
      for (Eigen::Index j = 0; j < nc; ++j) {
        if (std::abs(tab(i, j)) > 1e-8) {
          col = j;
          break;
        }
      }
      if (col >= 0) pivot(i, col);
      // A fully zero structural row is redundant; the artificial stays
      // basic at level zero and never re-enters phase 2.
    }
  }

  if (!iterate(cost2, nc, true)) return res;

  Eigen::VectorXd y = Eigen::VectorXd::Zero(nc);
  for (Eigen::Index i = 0; i < nr; ++i) {
    const Eigen::Index bj = basis[static_cast<std::size_t>(i)];
    if (bj < nc) y[bj] = tab(i, total);
  }

  // Multipliers from the original columns of the final basis.
  Eigen::MatrixXd eb(nr, nr);
  Eigen::VectorXd gb(nr);
  for (Eigen::Index i = 0; i < nr; ++i) {
    const Eigen::Index bj = basis[static_cast<std::size_t>(i)];
    if (bj < nc) {
      eb.col(i) = e_in.col(bj);
      gb[i] = g[bj];
    } else {
      // Redundant row; keep the artificial unit column with zero cost.
      eb.col(i) = Eigen::VectorXd::Zero(nr);
      eb(bj - nc, i) = h_in[bj - nc] < 0.0 ? -1.0 : 1.0;
      gb[i] = 0.0;
    }
  }
  res.pi = eb.transpose().colPivHouseholderQr().solve(gb);
  res.y = y;
  res.optimal = true;
  return res;
}

}  // namespace

LpSolution solve_lp_reference(const LinearProgram& lp) {
  const Eigen::Index m = lp.a.rows();
  const Eigen::Index n = lp.a.cols();
  if (lp.b.size() != m || lp.c.size() != n)
    throw std::invalid_argument("inconsistent LP dimensions");

  // Dual standard form: min b.y  s.t.  a^T y = -c, y >= 0. The equality
  // multipliers of the optimum recover the primal x.
  StandardResult sr = solve_standard(lp.a.transpose(), -lp.c, lp.b);

  LpSolution sol;
  sol.iterations = sr.iterations;
  if (!sr.optimal) return sol;
  sol.y = sr.y;
  sol.x = sr.pi;
  sol.slack = lp.b - lp.a * sol.x;
  sol.objective = lp.c.dot(sol.x);

  const double scale = 1.0 + lp.b.cwiseAbs().maxCoeff() + lp.c.cwiseAbs().maxCoeff();
  const double feas = sol.slack.minCoeff();
  const double dual_feas = sol.y.minCoeff();
  const double stationarity = (lp.a.transpose() * sol.y + lp.c).cwiseAbs().maxCoeff();
  const double gap = std::abs(lp.c.dot(sol.x) + lp.b.dot(sol.y));
  sol.optimal = feas > -1e-7 * scale && dual_feas > -1e-9 &&
                stationarity < 1e-7 * scale && gap < 1e-6 * scale;
  return sol;
}

struct LpOperator::Impl {
  LinearProgram lp;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Eigen::VectorXd q;               // [b; -c; 0]
  Eigen::LDLT<Eigen::MatrixXd> normal;

  Eigen::VectorXd apply_m(const Eigen::VectorXd& z) const {
    Eigen::VectorXd w(m + n + 1);
    const auto x = z.head(n);
    const auto s = z.segment(n, m);
    const auto y = z.tail(m);
    w.head(m) = lp.a * x + s;
    w.segment(m, n) = lp.a.transpose() * y;
    w[m + n] = lp.c.dot(x) + lp.b.dot(y);
    return w;
  }

  Eigen::VectorXd apply_mt(const Eigen::VectorXd& w) const {
    Eigen::VectorXd z(n + 2 * m);
    const auto w1 = w.head(m);
    const auto w2 = w.segment(m, n);
    const double w3 = w[m + n];
    z.head(n) = lp.a.transpose() * w1 + w3 * lp.c;
    z.segment(n, m) = w1;
    z.tail(m) = lp.a * w2 + w3 * lp.b;
    return z;
  }

  Eigen::VectorXd project(const Eigen::VectorXd& z) const {
    return z - apply_mt(normal.solve(apply_m(z) - q));
  }
};

LpOperator::LpOperator(LinearProgram lp_in) {
  auto impl = std::make_shared<Impl>();
  impl->lp = std::move(lp_in);
  impl->m = impl->lp.a.rows();
  impl->n = impl->lp.a.cols();
  if (impl->lp.b.size() != impl->m || impl->lp.c.size() != impl->n)
    throw std::invalid_argument("inconsistent LP dimensions");

  const Eigen::Index m = impl->m;
  const Eigen::Index n = impl->n;
  impl->q = Eigen::VectorXd::Zero(m + n + 1);
  impl->q.head(m) = impl->lp.b;
  impl->q.segment(m, n) = -impl->lp.c;

  Eigen::MatrixXd gram(m + n + 1, m + n + 1);
  gram.setZero();
  gram.topLeftCorner(m, m) =
      impl->lp.a * impl->lp.a.transpose() + Eigen::MatrixXd::Identity(m, m);
  gram.block(m, m, n, n) = impl->lp.a.transpose() * impl->lp.a;
  const Eigen::VectorXd ac = impl->lp.a * impl->lp.c;
  const Eigen::VectorXd atb = impl->lp.a.transpose() * impl->lp.b;
  gram.block(0, m + n, m, 1) = ac;
  gram.block(m + n, 0, 1, m) = ac.transpose();
  gram.block(m, m + n, n, 1) = atb;
  gram.block(m + n, m, 1, n) = atb.transpose();
  gram(m + n, m + n) = impl->lp.c.squaredNorm() + impl->lp.b.squaredNorm();

  impl->normal.compute(gram);
  if (impl->normal.info() != Eigen::Success)
    throw std::invalid_argument(
        "LP operator requires a full-column-rank constraint matrix");

  impl_ = impl;
  auto shared = impl_;
  op_ = SystemOperator(
      n + 2 * m,
      [shared, n, m](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        Eigen::VectorXd r = 2.0 * shared->project(z) - z;
        r.tail(2 * m) = r.tail(2 * m).cwiseAbs();
        return r;
      },
      "lp-reflection");
  op_.with_conic_alpha(1.0);
}

const LinearProgram& LpOperator::lp() const { return impl_->lp; }
Eigen::Index LpOperator::num_vars() const { return impl_->n; }
Eigen::Index LpOperator::num_rows() const { return impl_->m; }
Eigen::Index LpOperator::state_dim() const { return impl_->n + 2 * impl_->m; }

Eigen::VectorXd LpOperator::project_affine(const Eigen::VectorXd& z) const {
  if (z.size() != state_dim())
    throw std::invalid_argument("state length does not match LP operator");
  return impl_->project(z);
}

Eigen::VectorXd LpOperator::decode(const Eigen::VectorXd& z) const {
  return project_affine(z).head(impl_->n);
}

Eigen::VectorXd LpOperator::embed(const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& s,
                                  const Eigen::VectorXd& y) const {
  if (x.size() != impl_->n || s.size() != impl_->m || y.size() != impl_->m)
    throw std::invalid_argument("embed parts do not match LP dimensions");
  Eigen::VectorXd z(state_dim());
  z << x, s, y;
  return z;
}

}  // namespace ccsp
