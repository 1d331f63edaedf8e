#include "ccsp/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace ccsp {

namespace {

constexpr std::array<double, 7> kDefaultScales = {1e-3, 1e-2, 1e-1, 1.0,
                                                  1e1,  1e2,  1e3};

}  // namespace

std::span<const double> default_probe_scales() { return kDefaultScales; }

ConicClass classify(double alpha_hat, double band) {
  if (alpha_hat < 1.0 - band) return ConicClass::kDissipative;
  if (alpha_hat > 1.0 + band) return ConicClass::kExpansive;
  return ConicClass::kPassive;
}

ConicClass classify(const ConicCertificate& cert, double band) {
  return classify(cert.alpha_hat, band);
}

const char* to_string(ConicClass klass) {
  switch (klass) {
    case ConicClass::kDissipative: return "dissipative";
    case ConicClass::kPassive: return "passive";
    case ConicClass::kExpansive: return "expansive";
  }
  return "?";
}

double spectral_norm(const Eigen::MatrixXd& a) {
  const Eigen::Index k = a.cols();
  const Eigen::MatrixXd b = a.transpose() * a;
  // Power iteration on A^T A from a fixed pseudo-random start.
  CounterRng rng(0xA11CEull, 0, 0, static_cast<std::uint64_t>(k));
  Eigen::VectorXd x = rng.gaussian_vector(k);
  x.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 20000; ++it) {
    Eigen::VectorXd y = b * x;
    const double ny = y.norm();
    if (ny == 0.0) return 0.0;
    y /= ny;
    const double next = y.dot(b * y);
    const bool settled = std::abs(next - lambda) <= 1e-14 * std::max(1.0, next);
    x = std::move(y);
    lambda = next;
    if (settled && it > 2) break;
  }
  return std::sqrt(std::max(0.0, lambda));
}

namespace {

std::optional<ConicCertificate> estimate_conic_impl(
    const SystemOperator& t, std::int64_t n_centers_or_one,
    const Eigen::VectorXd* fixed_center, std::int64_t n_dirs,
    std::span<const double> scales, CounterRng& rng) {
  if (n_dirs < 1) throw std::invalid_argument("n_dirs must be >= 1");
  if (scales.empty()) throw std::invalid_argument("at least one probe scale required");
  for (double s : scales)
    if (!(s > 0.0)) throw std::invalid_argument("probe scales must be positive");

  ConicCertificate cert;
  cert.scope = fixed_center ? CertificateScope::kAboutPoint
                            : CertificateScope::kEverywhereSampled;
  cert.scales_probed.assign(scales.begin(), scales.end());

  if (const AffineForm* f = t.affine()) {
    cert.alpha_hat = spectral_norm(f->a);
    cert.exact = true;
    cert.n_samples = 0;
    cert.klass = classify(cert.alpha_hat, kExactBand);
    return cert;
  }

  const Eigen::Index k = t.dim();
  double alpha = 0.0;
  std::int64_t samples = 0;
  std::size_t scale_cursor = 0;
  for (std::int64_t c = 0; c < n_centers_or_one; ++c) {
    Eigen::VectorXd center;
    if (fixed_center) {
      center = *fixed_center;
    } else {
      const double cs = scales[static_cast<std::size_t>(c) % scales.size()];
      center = cs * rng.gaussian_vector(k);
    }
    Eigen::VectorXd tc = t(center);
    if (!tc.allFinite()) return std::nullopt;
    for (std::int64_t j = 0; j < n_dirs; ++j) {
      const double s = scales[scale_cursor++ % scales.size()];
      const Eigen::VectorXd u = rng.sphere_vector(k);
      const Eigen::VectorXd tv = t(center + s * u);
      if (!tv.allFinite()) return std::nullopt;
      const double ratio = (tv - tc).norm() / s;
      if (!std::isfinite(ratio)) return std::nullopt;
      alpha = std::max(alpha, ratio);
      ++samples;
    }
  }
  cert.alpha_hat = alpha;
  cert.n_samples = samples;
  cert.klass = classify(alpha, kSampledBand);
  return cert;
}

}  // namespace

std::optional<ConicCertificate> estimate_conic(
    const SystemOperator& t, const Eigen::VectorXd& center,
    std::int64_t n_dirs, std::span<const double> scales, CounterRng& rng) {
  if (center.size() != t.dim())
    throw std::invalid_argument("probe center length does not match operator");
  return estimate_conic_impl(t, 1, &center, n_dirs, scales, rng);
}

std::optional<ConicCertificate> estimate_conic_everywhere(
    const SystemOperator& t, std::int64_t n_centers, std::int64_t n_dirs,
    std::span<const double> scales, CounterRng& rng) {
  if (n_centers < 1) throw std::invalid_argument("n_centers must be >= 1");
  return estimate_conic_impl(t, n_centers, nullptr, n_dirs, scales, rng);
}

MixingEstimate estimate_mixing(const SystemOperator& t,
                               const Eigen::VectorXd& vstar,
                               std::int64_t n_dirs,
                               std::span<const double> scales, CounterRng& rng,
                               double fixed_point_tol) {
  if (vstar.size() != t.dim())
    throw std::invalid_argument("vstar length does not match operator");
  if (residual(t, vstar) > fixed_point_tol)
    throw std::invalid_argument("vstar is not a fixed point within tolerance");
  if (n_dirs < 1) throw std::invalid_argument("n_dirs must be >= 1");
  if (scales.empty()) throw std::invalid_argument("at least one probe scale required");

  const Eigen::Index k = t.dim();
  MixingEstimate est;
  est.gamma_hat = -1.0;
  for (std::int64_t j = 0; j < n_dirs; ++j) {
    const double s = scales[static_cast<std::size_t>(j) % scales.size()];
    const Eigen::VectorXd v = vstar + s * rng.sphere_vector(k);
    const Eigen::VectorXd dv = v - vstar;
    const Eigen::VectorXd dt = t(v) - vstar;
    const double den = dt.norm() * dv.norm();
    if (den == 0.0 || !std::isfinite(den)) {
      ++est.skipped;
      continue;
    }
    est.gamma_hat = std::max(est.gamma_hat, dt.dot(dv) / den);
    ++est.n_samples;
  }
  est.gamma_hat = std::min(1.0, std::max(-1.0, est.gamma_hat));
  return est;
}

double theta_squared(double alpha, double gamma, double rho) {
  return (alpha * alpha + 1.0 - 2.0 * alpha * gamma) * rho * rho +
         (2.0 * alpha * gamma - 2.0) * rho + 1.0;
}

FilterInterval stable_filter_interval(double alpha,
                                      std::optional<double> gamma) {
  if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  FilterInterval out;
  if (gamma) {
    const double g = *gamma;
    if (g < -1.0 || g >= 1.0)
      throw HypothesisError("mixing parameter must lie in [-1, 1)");
    if (alpha * g >= 1.0)
      throw HypothesisError("stable filtering requires alpha*gamma < 1");
    const double den = 1.0 + alpha * alpha - 2.0 * alpha * g;
    out.upper = 2.0 * (1.0 - alpha * g) / den;
    out.rho_optimal = (1.0 - alpha * g) / den;
    return out;
  }
  if (alpha < 1.0) {
    out.upper = 2.0 / (1.0 + alpha);
    return out;
  }
  if (alpha == 1.0) {
    out.upper = 1.0;
    out.rho_optimal = 0.5;
    return out;
  }
  throw HypothesisError(
      "expansive operator needs a mixing bound to admit a stable filter interval");
}

BallRegion entrapment_ball(const SystemOperator& t, const Eigen::VectorXd& c,
                           double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw std::invalid_argument("entrapment requires alpha in [0, 1)");
  BallRegion ball;
  ball.center = c;
  ball.radius = (t(c) - c).norm() / (1.0 - alpha);
  return ball;
}

bool ball_condition(const SystemOperator& t, const BallRegion& ball,
                    double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw std::invalid_argument("ball condition requires alpha in [0, 1)");
  return (ball.center - t(ball.center)).norm() <= (1.0 - alpha) * ball.radius;
}

double stewart_residual(const Eigen::VectorXd& v, const Eigen::VectorXd& tv,
                        const Eigen::VectorXd& vstar, double rho) {
  if (v.size() != tv.size() || v.size() != vstar.size())
    throw std::invalid_argument("stewart_residual requires equal-length vectors");
  const double lhs = (rho * tv + (1.0 - rho) * v - vstar).squaredNorm();
  const double rhs = rho * (tv - vstar).squaredNorm() +
                     (1.0 - rho) * (v - vstar).squaredNorm() -
                     rho * (1.0 - rho) * (tv - v).squaredNorm();
  return std::abs(lhs - rhs);
}

namespace {

struct LogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double msr = std::numeric_limits<double>::infinity();
  bool ok = false;
};

LogFit fit_line(std::span<const double> x, std::span<const double> y) {
  LogFit fit;
  const std::size_t n = x.size();
  if (n < 2) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double dn = static_cast<double>(n);
  const double det = dn * sxx - sx * sx;
  if (std::abs(det) < 1e-300) return fit;
  fit.slope = (dn * sxy - sx * sy) / det;
  fit.intercept = (sy * sxx - sx * sxy) / det;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += r * r;
  }
  fit.msr = sse / dn;
  fit.ok = true;
  return fit;
}

}  // namespace

ConvergenceEstimate estimate_rate(std::span<const double> distances,
                                  std::span<const std::int64_t> steps) {
  if (distances.size() != steps.size())
    throw std::invalid_argument("distances and steps must have equal length");
  if (distances.size() < 10)
    throw std::invalid_argument("rate estimation needs at least 10 recorded points");

  // Exact arrival: fit over the pre-arrival window.
  std::size_t usable = distances.size();
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (distances[i] <= 0.0) {
      usable = i;
      break;
    }
  }
  if (usable < 4)
    throw std::invalid_argument("too few nonzero distances to fit a rate");

  const std::size_t begin = usable / 2;
  const std::size_t end = usable;

  std::vector<double> n_lin, logd_lin, logn_poly, logd_poly;
  for (std::size_t i = begin; i < end; ++i) {
    const double d = distances[i];
    const double n = static_cast<double>(steps[i]);
    n_lin.push_back(n);
    logd_lin.push_back(std::log(d));
    if (steps[i] > 0) {
      logn_poly.push_back(std::log(n));
      logd_poly.push_back(std::log(d));
    }
  }

  const LogFit lin = fit_line(n_lin, logd_lin);
  const LogFit poly = fit_line(logn_poly, logd_poly);

  ConvergenceEstimate est;
  est.fit_window = {begin, end};

  const double mu = lin.ok ? std::exp(lin.slope) : 0.0;
  const bool lin_valid = lin.ok && mu > 0.0 && mu < 1.0;
  const double q = poly.ok ? -poly.slope : 0.0;
  const bool poly_valid = poly.ok && q > 0.0;

  if (lin_valid) est.mu_hat = mu;
  if (poly_valid) est.order_q_hat = q;

  if (lin_valid && (!poly_valid || lin.msr <= poly.msr)) {
    est.preferred = PreferredFit::kLinear;
    est.k_hat = std::exp(lin.intercept);
    est.fit_residual = lin.msr;
  } else if (poly_valid) {
    est.preferred = PreferredFit::kPolynomial;
    est.k_hat = std::exp(poly.intercept);
    est.fit_residual = poly.msr;
  } else {
    est.preferred = PreferredFit::kNone;
    est.fit_residual = std::min(lin.msr, poly.msr);
  }
  return est;
}

ConvergenceEstimate estimate_rate(const Trajectory& traj) {
  if (traj.distances.empty())
    throw std::invalid_argument("trajectory carries no distances; supply vstar when running");
  return estimate_rate(traj.distances, traj.steps);
}

double residual(const SystemOperator& t, const Eigen::VectorXd& v) {
  return (t(v) - v).norm();
}

}  // namespace ccsp
