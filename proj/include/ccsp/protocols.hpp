#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "ccsp/operators.hpp"
#include "ccsp/rng.hpp"

namespace ccsp {

enum class Protocol { kSynchronous, kAsynchronous };
enum class StopReason { kToleranceReached, kMaxSteps, kDivergence };

struct IterationConfig {
  Protocol protocol = Protocol::kSynchronous;
  double p = 1.0;                 // firing probability; used when asynchronous
  std::int64_t max_steps = 1000;
  double residual_tol = 0.0;      // stop once ||T(v) - v|| <= tol
  std::int64_t record_every = 1;
  std::uint64_t seed = 0;
  std::int64_t trial = 0;         // substream index; run_trials sets this
  bool record_states = true;      // keep recorded state vectors (memory knob)
};

void validate(const IterationConfig& cfg);

/// Recorded state-evolution sequence. All recorded series share one
/// length; `steps` holds the step index n of each record and
/// `equivalent_iterations` the matching n*p (n*1 when synchronous).
struct Trajectory {
  std::vector<Eigen::VectorXd> states;
  std::vector<double> residuals;
  std::vector<double> distances;   // filled only when vstar supplied
  std::vector<std::int64_t> steps;
  std::vector<double> equivalent_iterations;
  std::int64_t steps_taken = 0;
  StopReason terminated_by = StopReason::kMaxSteps;
  bool diverged() const { return terminated_by == StopReason::kDivergence; }
  std::size_t size() const { return steps.size(); }
};

/// Diagonal 0/1 firing pattern drawn per asynchronous step.
struct FiringMask {
  Eigen::VectorXd diag;  // entries are exactly 0.0 or 1.0
};

FiringMask bernoulli_mask(Eigen::Index k, double p, CounterRng& rng);

/// Coordinatewise select: fired coordinates take tv, held ones keep v.
Eigen::VectorXd apply_mask(const FiringMask& mask, const Eigen::VectorXd& tv,
                           const Eigen::VectorXd& v);

Trajectory run_synchronous(const SystemOperator& t, const Eigen::VectorXd& v0,
                           const IterationConfig& cfg,
                           const Eigen::VectorXd* vstar = nullptr);

/// Each step draws a fresh mask keyed by (seed, trial, step), evaluates T
/// fully, and holds the non-fired coordinates. p = 1 reproduces the
/// synchronous trajectory bitwise.
Trajectory run_asynchronous(const SystemOperator& t, const Eigen::VectorXd& v0,
                            const IterationConfig& cfg,
                            const Eigen::VectorXd* vstar = nullptr);

Trajectory run(const SystemOperator& t, const Eigen::VectorXd& v0,
               const IterationConfig& cfg,
               const Eigen::VectorXd* vstar = nullptr);

/// Draws the trial's initial state from its dedicated substream.
using V0Sampler = std::function<Eigen::VectorXd(CounterRng&)>;

/// Mean distance / squared distance to vstar across trials, indexed by
/// equivalent iterations. Trials use independent substreams of cfg.seed,
/// so the result is deterministic for a given seed regardless of
/// execution order; the reduction always runs in trial order.
struct AggregateSeries {
  std::vector<std::int64_t> steps;
  std::vector<double> equivalent_iterations;
  std::vector<double> mean_distance;
  std::vector<double> mean_squared_distance;
  std::int64_t trials = 0;
  std::int64_t diverged_trials = 0;
};

AggregateSeries run_trials(const SystemOperator& t, const V0Sampler& v0_sampler,
                           const IterationConfig& cfg, std::int64_t n_trials,
                           const Eigen::VectorXd& vstar, int n_threads = 1);

}  // namespace ccsp
