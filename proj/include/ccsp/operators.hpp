#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccsp {

/// Thrown when a map required to be an isometry (orthogonal matrix,
/// neutral linear part) fails the check; carries the measured deviation.
class OrthogonalityError : public std::invalid_argument {
 public:
  OrthogonalityError(const std::string& what, double deviation)
      : std::invalid_argument(what), deviation_(deviation) {}
  double deviation() const { return deviation_; }

 private:
  double deviation_;
};

/// Affine description v -> a*v + b, carried as metadata so analysis can
/// use exact linear-algebra paths instead of sampling.
struct AffineForm {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
};

/// A deterministic map from R^k to R^k together with optional metadata:
/// an everywhere-conic bound (Lipschitz constant certificate) and, for
/// affine maps, the explicit (A, b) form. Instances are immutable after
/// construction and safe to evaluate concurrently.
class SystemOperator {
 public:
  using EvalFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  SystemOperator() = default;

  SystemOperator(Eigen::Index dim, EvalFn eval, std::string label)
      : dim_(dim), eval_(std::move(eval)), label_(std::move(label)) {
    if (dim_ < 1) throw std::invalid_argument("operator dimension must be >= 1");
    if (!eval_) throw std::invalid_argument("operator requires an eval function");
  }

  Eigen::Index dim() const { return dim_; }
  const std::string& label() const { return label_; }
  bool valid() const { return static_cast<bool>(eval_); }

  Eigen::VectorXd operator()(const Eigen::VectorXd& v) const {
    if (!eval_) throw std::logic_error("evaluating an empty operator");
    if (v.size() != dim_)
      throw std::invalid_argument("operator input has length " +
                                  std::to_string(v.size()) + ", expected " +
                                  std::to_string(dim_));
    Eigen::VectorXd out = eval_(v);
    if (out.size() != dim_)
      throw std::logic_error("operator produced output of wrong length");
    return out;
  }

  /// Everywhere-conic certificate, if one was attached. Absent means
  /// "unclassified", never "passive by default".
  std::optional<double> conic_alpha() const { return conic_alpha_; }

  const AffineForm* affine() const { return affine_.get(); }

  SystemOperator& with_conic_alpha(double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("conic parameter must be >= 0");
    conic_alpha_ = alpha;
    return *this;
  }

  SystemOperator& with_affine(AffineForm form) {
    affine_ = std::make_shared<const AffineForm>(std::move(form));
    return *this;
  }

 private:
  Eigen::Index dim_ = 0;
  EvalFn eval_;
  std::string label_;
  std::optional<double> conic_alpha_;
  std::shared_ptr<const AffineForm> affine_;
};

/// rho*T(v) + (1-rho)*v for a fixed rho > 0. Shares its fixed-point set
/// with the wrapped operator. rho > 1 is admitted (acceleration); the
/// analysis side reports the stability interval.
class FilteredOperator : public SystemOperator {
 public:
  FilteredOperator(SystemOperator inner, double rho);
  const SystemOperator& inner() const { return *inner_; }
  double rho() const { return rho_; }

 private:
  std::shared_ptr<const SystemOperator> inner_;
  double rho_;
};

/// rho*T1(v) + (1-rho)*T0(v) for rho in [0, 1].
class HomotopyOperator : public SystemOperator {
 public:
  HomotopyOperator(SystemOperator t1, SystemOperator t0, double rho);
  const SystemOperator& t1() const { return *t1_; }
  const SystemOperator& t0() const { return *t0_; }
  double rho() const { return rho_; }

 private:
  std::shared_ptr<const SystemOperator> t1_;
  std::shared_ptr<const SystemOperator> t0_;
  double rho_;
};

/// S*v + e with S a linear neutral (norm-preserving) map. Passive
/// everywhere, so it carries conic certificate 1.
class SourceOperator : public SystemOperator {
 public:
  SourceOperator(Eigen::MatrixXd s, Eigen::VectorXd e);
  const Eigen::MatrixXd& s() const { return *s_; }
  const Eigen::VectorXd& e() const { return *e_; }

 private:
  std::shared_ptr<const Eigen::MatrixXd> s_;
  std::shared_ptr<const Eigen::VectorXd> e_;
};

/// Frobenius norm of S^T S - I; the neutrality / orthogonality defect.
double isometry_deviation(const Eigen::MatrixXd& s);

/// Tolerance on ||S^T S - I||_F accepted by make_source and the CCSP
/// constructors. Exact rotations and polar factors sit far below it.
inline constexpr double kNeutralityTolerance = 1e-8;

SystemOperator identity_operator(Eigen::Index k);
SystemOperator make_affine(Eigen::MatrixXd a, Eigen::VectorXd b,
                           std::string label = "affine");

FilteredOperator filtered(SystemOperator t, double rho);
HomotopyOperator homotopy(SystemOperator t1, SystemOperator t0, double rho);

/// Composition; the first list element is applied first.
SystemOperator compose(std::vector<SystemOperator> ops);
SystemOperator self_compose(SystemOperator t, int m);

/// T2(v) = T(v + v1) - v1; fixed points translate by -v1.
SystemOperator translate_to_zero(SystemOperator t, Eigen::VectorXd v1);

SourceOperator make_source(Eigen::MatrixXd s, Eigen::VectorXd e);

}  // namespace ccsp
