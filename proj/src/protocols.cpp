#include "ccsp/protocols.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace ccsp {

void validate(const IterationConfig& cfg) {
  if (cfg.max_steps < 1)
    throw std::invalid_argument("max_steps must be >= 1");
  if (cfg.record_every < 1)
    throw std::invalid_argument("record_every must be >= 1");
  if (cfg.residual_tol < 0.0)
    throw std::invalid_argument("residual_tol must be >= 0");
  if (cfg.protocol == Protocol::kAsynchronous &&
      !(cfg.p >= 0.0 && cfg.p <= 1.0))
    throw std::invalid_argument("asynchronous protocol requires p in [0, 1]");
}

FiringMask bernoulli_mask(Eigen::Index k, double p, CounterRng& rng) {
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("firing probability must lie in [0, 1]");
  FiringMask mask;
  mask.diag.resize(k);
  for (Eigen::Index i = 0; i < k; ++i)
    mask.diag[i] = rng.uniform01() < p ? 1.0 : 0.0;
  return mask;
}

Eigen::VectorXd apply_mask(const FiringMask& mask, const Eigen::VectorXd& tv,
                           const Eigen::VectorXd& v) {
  return (mask.diag.array() != 0.0).select(tv, v);
}

namespace {

Trajectory run_impl(const SystemOperator& t, const Eigen::VectorXd& v0,
                    const IterationConfig& cfg, const Eigen::VectorXd* vstar,
                    bool asynchronous) {
  validate(cfg);
  if (v0.size() != t.dim())
    throw std::invalid_argument("initial state length does not match operator");
  if (vstar && vstar->size() != t.dim())
    throw std::invalid_argument("reference fixed point length does not match operator");

  const double step_weight = asynchronous ? cfg.p : 1.0;
  Trajectory traj;

  Eigen::VectorXd v = v0;
  std::int64_t last_recorded = -1;

  auto record = [&](std::int64_t n, double residual) {
    if (cfg.record_states) traj.states.push_back(v);
    traj.residuals.push_back(residual);
    if (vstar) traj.distances.push_back((v - *vstar).norm());
    traj.steps.push_back(n);
    traj.equivalent_iterations.push_back(static_cast<double>(n) * step_weight);
    last_recorded = n;
  };

  for (std::int64_t n = 0;; ++n) {
    if (!v.allFinite()) {
      traj.terminated_by = StopReason::kDivergence;
      traj.steps_taken = n;
      break;
    }
    Eigen::VectorXd tv = t(v);
    const double residual = (tv - v).norm();
    const bool due = (n % cfg.record_every == 0);
    if (due) record(n, residual);

    if (residual <= cfg.residual_tol && std::isfinite(residual)) {
      if (!due) record(n, residual);
      traj.terminated_by = StopReason::kToleranceReached;
      traj.steps_taken = n;
      break;
    }
    if (n == cfg.max_steps) {
      if (!due) record(n, residual);
      traj.terminated_by = StopReason::kMaxSteps;
      traj.steps_taken = n;
      break;
    }

    if (asynchronous) {
      CounterRng rng(cfg.seed, streams::kMask,
                     static_cast<std::uint64_t>(cfg.trial),
                     static_cast<std::uint64_t>(n + 1));
      const FiringMask mask = bernoulli_mask(t.dim(), cfg.p, rng);
      v = apply_mask(mask, tv, v);
    } else {
      v = std::move(tv);
    }
  }
  return traj;
}

}  // namespace

Trajectory run_synchronous(const SystemOperator& t, const Eigen::VectorXd& v0,
                           const IterationConfig& cfg,
                           const Eigen::VectorXd* vstar) {
  return run_impl(t, v0, cfg, vstar, false);
}

Trajectory run_asynchronous(const SystemOperator& t, const Eigen::VectorXd& v0,
                            const IterationConfig& cfg,
                            const Eigen::VectorXd* vstar) {
  return run_impl(t, v0, cfg, vstar, true);
}

Trajectory run(const SystemOperator& t, const Eigen::VectorXd& v0,
               const IterationConfig& cfg, const Eigen::VectorXd* vstar) {
  return run_impl(t, v0, cfg, vstar,
                  cfg.protocol == Protocol::kAsynchronous);
}

AggregateSeries run_trials(const SystemOperator& t, const V0Sampler& v0_sampler,
                           const IterationConfig& cfg, std::int64_t n_trials,
                           const Eigen::VectorXd& vstar, int n_threads) {
  if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  if (vstar.size() != t.dim())
    throw std::invalid_argument("reference fixed point length does not match operator");
  validate(cfg);

  struct TrialCurve {
    std::vector<double> dist;
    std::vector<std::int64_t> steps;
    std::vector<double> eq;
    bool diverged = false;
  };
  std::vector<TrialCurve> curves(static_cast<std::size_t>(n_trials));

  auto run_one = [&](std::int64_t trial) {
    IterationConfig tc = cfg;
    tc.trial = trial;
    tc.record_states = false;
    CounterRng init_rng(cfg.seed, streams::kInit,
                        static_cast<std::uint64_t>(trial));
    const Eigen::VectorXd v0 = v0_sampler(init_rng);
    Trajectory traj = run(t, v0, tc, &vstar);
    TrialCurve& c = curves[static_cast<std::size_t>(trial)];
    c.dist = std::move(traj.distances);
    c.steps = std::move(traj.steps);
    c.eq = std::move(traj.equivalent_iterations);
    c.diverged = traj.diverged();
  };

  if (n_threads <= 1) {
    for (std::int64_t trial = 0; trial < n_trials; ++trial) run_one(trial);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::int64_t> next{0};
    for (int w = 0; w < n_threads; ++w)
      pool.emplace_back([&] {
        while (true) {
          const std::int64_t trial = next.fetch_add(1);
          if (trial >= n_trials) return;
          run_one(trial);
        }
      });
    for (auto& th : pool) th.join();
  }

  // Aggregate over the prefix every trial recorded.
  std::size_t len = curves.front().dist.size();
  for (const auto& c : curves) len = std::min(len, c.dist.size());

  AggregateSeries agg;
  agg.trials = n_trials;
  agg.steps.assign(curves.front().steps.begin(),
                   curves.front().steps.begin() + static_cast<std::ptrdiff_t>(len));
  agg.equivalent_iterations.assign(
      curves.front().eq.begin(),
      curves.front().eq.begin() + static_cast<std::ptrdiff_t>(len));
  agg.mean_distance.assign(len, 0.0);
  agg.mean_squared_distance.assign(len, 0.0);
  for (const auto& c : curves) {
    if (c.diverged) ++agg.diverged_trials;
    for (std::size_t i = 0; i < len; ++i) {
      agg.mean_distance[i] += c.dist[i];
      agg.mean_squared_distance[i] += c.dist[i] * c.dist[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(n_trials);
  for (std::size_t i = 0; i < len; ++i) {
    agg.mean_distance[i] *= inv;
    agg.mean_squared_distance[i] *= inv;
  }
  return agg;
}

}  // namespace ccsp
