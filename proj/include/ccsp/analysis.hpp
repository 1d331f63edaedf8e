#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ccsp/operators.hpp"
#include "ccsp/protocols.hpp"
#include "ccsp/rng.hpp"

namespace ccsp {

/// Thrown when a lemma's hypotheses are violated (e.g. requesting a
/// stable filter interval for an expansive operator whose alpha*gamma
/// product reaches 1).
class HypothesisError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class ConicClass { kDissipative, kPassive, kExpansive };
enum class CertificateScope { kAboutPoint, kEverywhereSampled };

/// Classification band defaults: exact (declared-affine) estimates get a
/// tight band, sampled black-box estimates a wide one for sampling noise.
inline constexpr double kExactBand = 1e-6;
inline constexpr double kSampledBand = 0.02;

/// Default probe scales, geometric from 1e-3 to 1e3.
std::span<const double> default_probe_scales();

/// Result of probing the difference-quotient supremum. Sampled
/// alpha_hat is a lower bound on the true supremum; `exact` marks the
/// spectral-norm path taken for declared-affine operators.
struct ConicCertificate {
  CertificateScope scope = CertificateScope::kAboutPoint;
  double alpha_hat = 0.0;
  ConicClass klass = ConicClass::kPassive;
  std::int64_t n_samples = 0;
  std::vector<double> scales_probed;
  bool exact = false;
};

ConicClass classify(double alpha_hat, double band);
ConicClass classify(const ConicCertificate& cert, double band);
const char* to_string(ConicClass klass);

/// Probes about one center. Directions are uniform on the unit sphere,
/// cycled through the given scales. Returns nullopt when the operator
/// evaluates to a non-finite value at some probe (unbounded; no
/// certificate). Declared-affine operators take the exact path (largest
/// singular value by power iteration) regardless of the probe budget.
std::optional<ConicCertificate> estimate_conic(
    const SystemOperator& t, const Eigen::VectorXd& center,
    std::int64_t n_dirs, std::span<const double> scales, CounterRng& rng);

/// Probes about sampled centers (Gaussian, scaled by the cycled probe
/// scales) with n_dirs directions each.
std::optional<ConicCertificate> estimate_conic_everywhere(
    const SystemOperator& t, std::int64_t n_centers, std::int64_t n_dirs,
    std::span<const double> scales, CounterRng& rng);

/// Largest singular value of the linear part; used by the exact path.
double spectral_norm(const Eigen::MatrixXd& a);

struct MixingEstimate {
  double gamma_hat = -1.0;  // max sampled cosine; lower bound on true gamma
  std::int64_t n_samples = 0;
  std::int64_t skipped = 0;  // probes with a zero denominator
};

/// Max cosine between T(v) - vstar and v - vstar over sampled v. vstar
/// must be a fixed point within fixed_point_tol.
MixingEstimate estimate_mixing(const SystemOperator& t,
                               const Eigen::VectorXd& vstar,
                               std::int64_t n_dirs,
                               std::span<const double> scales, CounterRng& rng,
                               double fixed_point_tol = 1e-8);

struct FilterInterval {
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> rho_optimal;
};

/// Stable filter-coefficient interval. With a mixing bound gamma the
/// general interval (0, 2(1-ag)/(1+a^2-2ag)) and its optimal midpoint
/// apply; without one: (0, 2/(1+alpha)) for dissipative alpha and (0, 1)
/// with optimum 1/2 for passive alpha = 1.
FilterInterval stable_filter_interval(double alpha,
                                      std::optional<double> gamma = {});

/// theta^2(rho) = (a^2+1-2ag) rho^2 + (2ag-2) rho + 1; the squared
/// per-step contraction bound of the filtered operator.
double theta_squared(double alpha, double gamma, double rho);

struct BallRegion {
  Eigen::VectorXd center;
  double radius = 0.0;
};

/// Ball that eventually traps every trajectory of an operator
/// dissipative about c: radius ||T(c) - c|| / (1 - alpha). Callers add
/// their own epsilon.
BallRegion entrapment_ball(const SystemOperator& t, const Eigen::VectorXd& c,
                           double alpha);

/// ||c - T(c)|| <= (1 - alpha) r; when true the ball maps into itself.
bool ball_condition(const SystemOperator& t, const BallRegion& ball,
                    double alpha);

/// |LHS - RHS| of the filtered-update distance identity
///   ||r*Tv + (1-r)*v - w||^2
///     = r||Tv - w||^2 + (1-r)||v - w||^2 - r(1-r)||Tv - v||^2.
double stewart_residual(const Eigen::VectorXd& v, const Eigen::VectorXd& tv,
                        const Eigen::VectorXd& vstar, double rho);

enum class PreferredFit { kNone, kLinear, kPolynomial };

struct ConvergenceEstimate {
  std::optional<double> mu_hat;       // linear rate, in (0,1) when present
  std::optional<double> order_q_hat;  // polynomial decay order
  double k_hat = 0.0;
  std::pair<std::size_t, std::size_t> fit_window{0, 0};  // [begin, end)
  double fit_residual = 0.0;          // mean squared log-residual of the fit
  PreferredFit preferred = PreferredFit::kNone;
};

/// Fits distance-to-fixed-point decay over the tail window (last half of
/// the recorded points, trimmed at exact arrival) and reports whichever
/// of the log-linear / log-log fits explains it better.
ConvergenceEstimate estimate_rate(std::span<const double> distances,
                                  std::span<const std::int64_t> steps);
ConvergenceEstimate estimate_rate(const Trajectory& traj);

/// ||T(v) - v||, the fixed-point membership measure.
double residual(const SystemOperator& t, const Eigen::VectorXd& v);

}  // namespace ccsp
