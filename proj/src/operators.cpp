#include "ccsp/operators.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

namespace ccsp {

namespace {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

double isometry_deviation(const Eigen::MatrixXd& s) {
  const Eigen::Index k = s.cols();
  return (s.transpose() * s - Eigen::MatrixXd::Identity(k, k)).norm();
}

SystemOperator identity_operator(Eigen::Index k) {
  SystemOperator op(
      k, [](const Eigen::VectorXd& v) { return v; }, "identity");
  op.with_conic_alpha(1.0).with_affine(
      {Eigen::MatrixXd::Identity(k, k), Eigen::VectorXd::Zero(k)});
  return op;
}

SystemOperator make_affine(Eigen::MatrixXd a, Eigen::VectorXd b,
                           std::string label) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("affine operator requires a square matrix");
  if (b.size() != a.rows())
    throw std::invalid_argument("affine offset length does not match matrix");
  auto am = std::make_shared<const Eigen::MatrixXd>(std::move(a));
  auto bv = std::make_shared<const Eigen::VectorXd>(std::move(b));
  SystemOperator op(
      bv->size(),
      [am, bv](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return (*am) * v + (*bv);
      },
      std::move(label));
  op.with_affine({*am, *bv});
  return op;
}

FilteredOperator::FilteredOperator(SystemOperator inner, double rho)
    : SystemOperator(), inner_(std::make_shared<SystemOperator>(std::move(inner))), rho_(rho) {
  if (!(rho > 0.0))
    throw std::invalid_argument("filter coefficient must be > 0");
  auto in = inner_;
  SystemOperator base(
      in->dim(),
      [in, rho](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return rho * (*in)(v) + (1.0 - rho) * v;
      },
      "filtered(rho=" + fmt_double(rho) + ") " + in->label());
  if (auto a = in->conic_alpha())
    base.with_conic_alpha(rho * *a + std::abs(1.0 - rho));
  if (const AffineForm* f = in->affine()) {
    const Eigen::Index k = in->dim();
    base.with_affine(
        {rho * f->a + (1.0 - rho) * Eigen::MatrixXd::Identity(k, k),
         rho * f->b});
  }
  static_cast<SystemOperator&>(*this) = std::move(base);
}

FilteredOperator filtered(SystemOperator t, double rho) {
  return FilteredOperator(std::move(t), rho);
}

HomotopyOperator::HomotopyOperator(SystemOperator t1, SystemOperator t0,
                                   double rho)
    : t1_(std::make_shared<SystemOperator>(std::move(t1))),
      t0_(std::make_shared<SystemOperator>(std::move(t0))),
      rho_(rho) {
  if (rho < 0.0 || rho > 1.0)
    throw std::invalid_argument("homotopy coefficient must lie in [0, 1]");
  if (t1_->dim() != t0_->dim())
    throw std::invalid_argument("homotopy endpoints have mismatched dimensions");
  auto a1 = t1_;
  auto a0 = t0_;
  SystemOperator base(
      a1->dim(),
      [a1, a0, rho](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return rho * (*a1)(v) + (1.0 - rho) * (*a0)(v);
      },
      "homotopy(rho=" + fmt_double(rho) + ") " + a1->label() + " / " +
          a0->label());
  if (t1_->conic_alpha() && t0_->conic_alpha())
    base.with_conic_alpha(rho * *t1_->conic_alpha() +
                          (1.0 - rho) * *t0_->conic_alpha());
  if (t1_->affine() && t0_->affine())
    base.with_affine(
        {rho * t1_->affine()->a + (1.0 - rho) * t0_->affine()->a,
         rho * t1_->affine()->b + (1.0 - rho) * t0_->affine()->b});
  static_cast<SystemOperator&>(*this) = std::move(base);
}

HomotopyOperator homotopy(SystemOperator t1, SystemOperator t0, double rho) {
  return HomotopyOperator(std::move(t1), std::move(t0), rho);
}

SystemOperator compose(std::vector<SystemOperator> ops) {
  if (ops.empty())
    throw std::invalid_argument("compose requires at least one operator");
  const Eigen::Index k = ops.front().dim();
  for (const auto& op : ops)
    if (op.dim() != k)
      throw std::invalid_argument("composed operators have mismatched dimensions");
  if (ops.size() == 1) return std::move(ops.front());

  bool have_alpha = true;
  double alpha_product = 1.0;
  std::optional<AffineForm> affine{AffineForm{
      Eigen::MatrixXd::Identity(k, k), Eigen::VectorXd::Zero(k)}};
  for (const auto& op : ops) {
    if (have_alpha && op.conic_alpha())
      alpha_product *= *op.conic_alpha();
    else
      have_alpha = false;
    if (affine && op.affine())
      affine = AffineForm{op.affine()->a * affine->a,
                          op.affine()->a * affine->b + op.affine()->b};
    else
      affine.reset();
  }

  auto chain = std::make_shared<const std::vector<SystemOperator>>(std::move(ops));
  SystemOperator out(
      k,
      [chain](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        Eigen::VectorXd x = v;
        for (const auto& op : *chain) x = op(x);
        return x;
      },
      "compose(" + std::to_string(chain->size()) + ")");
  if (have_alpha) out.with_conic_alpha(alpha_product);
  if (affine) out.with_affine(std::move(*affine));
  return out;
}

SystemOperator self_compose(SystemOperator t, int m) {
  if (m < 1) throw std::invalid_argument("self-composition count must be >= 1");
  if (m == 1) return t;

  std::optional<double> alpha;
  if (auto a = t.conic_alpha()) alpha = std::pow(*a, m);
  std::optional<AffineForm> affine;
  if (const AffineForm* f = t.affine()) {
    AffineForm acc{f->a, f->b};
    for (int i = 1; i < m; ++i)
      acc = AffineForm{f->a * acc.a, f->a * acc.b + f->b};
    affine = std::move(acc);
  }

  auto in = std::make_shared<const SystemOperator>(std::move(t));
  SystemOperator out(
      in->dim(),
      [in, m](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        Eigen::VectorXd x = v;
        for (int i = 0; i < m; ++i) x = (*in)(x);
        return x;
      },
      in->label() + "^" + std::to_string(m));
  if (alpha) out.with_conic_alpha(*alpha);
  if (affine) out.with_affine(std::move(*affine));
  return out;
}

SystemOperator translate_to_zero(SystemOperator t, Eigen::VectorXd v1) {
  if (v1.size() != t.dim())
    throw std::invalid_argument("translation vector length does not match operator");

  std::optional<double> alpha = t.conic_alpha();
  std::optional<AffineForm> affine;
  if (const AffineForm* f = t.affine())
    affine = AffineForm{f->a, f->a * v1 + f->b - v1};

  auto in = std::make_shared<const SystemOperator>(std::move(t));
  auto shift = std::make_shared<const Eigen::VectorXd>(std::move(v1));
  SystemOperator out(
      in->dim(),
      [in, shift](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return (*in)(v + *shift) - *shift;
      },
      "translated " + in->label());
  if (alpha) out.with_conic_alpha(*alpha);
  if (affine) out.with_affine(std::move(*affine));
  return out;
}

SourceOperator::SourceOperator(Eigen::MatrixXd s, Eigen::VectorXd e)
    : s_(std::make_shared<const Eigen::MatrixXd>(std::move(s))),
      e_(std::make_shared<const Eigen::VectorXd>(std::move(e))) {
  if (s_->rows() != s_->cols())
    throw std::invalid_argument("source operator requires a square matrix");
  if (e_->size() != s_->rows())
    throw std::invalid_argument("source offset length does not match matrix");
  const double dev = isometry_deviation(*s_);
  if (!(dev <= kNeutralityTolerance))
    throw OrthogonalityError(
        "source matrix is not neutral: ||S^T S - I||_F = " + fmt_double(dev),
        dev);
  auto sm = s_;
  auto ev = e_;
  SystemOperator base(
      ev->size(),
      [sm, ev](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return (*sm) * v + (*ev);
      },
      "source");
  base.with_conic_alpha(1.0).with_affine({*sm, *ev});
  static_cast<SystemOperator&>(*this) = std::move(base);
}

SourceOperator make_source(Eigen::MatrixXd s, Eigen::VectorXd e) {
  return SourceOperator(std::move(s), std::move(e));
}

}  // namespace ccsp
