#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "ccsp/operators.hpp"
#include "ccsp/protocols.hpp"

using namespace ccsp;

namespace {

SystemOperator scale_op(Eigen::Index k, double a) {
  return make_affine(a * Eigen::MatrixXd::Identity(k, k),
                     Eigen::VectorXd::Zero(k));
}

Eigen::VectorXd ones(Eigen::Index k) { return Eigen::VectorXd::Ones(k); }

// Exhaustive expectation of ||v1 - vstar||^2 over all 2^k firing masks.
double enumerate_one_step_expectation(const SystemOperator& t,
                                      const Eigen::VectorXd& v0,
                                      const Eigen::VectorXd& vstar, double p) {
  const Eigen::Index k = t.dim();
  const Eigen::VectorXd tv = t(v0);
  double total = 0.0;
  for (std::uint64_t bits = 0; bits < (1ull << k); ++bits) {
    double prob = 1.0;
    Eigen::VectorXd v1(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      if (bits & (1ull << i)) {
        prob *= p;
        v1[i] = tv[i];
      } else {
        prob *= 1.0 - p;
        v1[i] = v0[i];
      }
    }
    total += prob * (v1 - vstar).squaredNorm();
  }
  return total;
}

}  // namespace

TEST_CASE("synchronous geometric decay records every iterate") {
  IterationConfig cfg;
  cfg.max_steps = 3;
  auto traj = run_synchronous(scale_op(1, 0.5), ones(1), cfg);
  REQUIRE(traj.states.size() == 4);
  CHECK(traj.states[0][0] == 1.0);
  CHECK(traj.states[1][0] == 0.5);
  CHECK(traj.states[2][0] == 0.25);
  CHECK(traj.states[3][0] == 0.125);
  CHECK(traj.terminated_by == StopReason::kMaxSteps);
  CHECK(traj.steps_taken == 3);
  CHECK(traj.equivalent_iterations.back() == 3.0);
}

TEST_CASE("identity stops immediately with zero residual") {
  IterationConfig cfg;
  cfg.max_steps = 100;
  cfg.residual_tol = 0.0;
  auto traj = run_synchronous(identity_operator(3), ones(3), cfg);
  CHECK(traj.terminated_by == StopReason::kToleranceReached);
  CHECK(traj.steps_taken == 0);
  REQUIRE(traj.residuals.size() == 1);
  CHECK(traj.residuals[0] == 0.0);
}

TEST_CASE("expansive iteration grows and is reported, not thrown") {
  IterationConfig cfg;
  cfg.max_steps = 50;
  auto traj = run_synchronous(scale_op(1, -1.1), ones(1), cfg);
  CHECK(traj.terminated_by == StopReason::kMaxSteps);
  for (std::size_t i = 0; i < traj.states.size(); ++i)
    CHECK(std::abs(traj.states[i][0]) ==
          doctest::Approx(std::pow(1.1, static_cast<double>(i))));

  // Outright overflow sets the divergence flag instead of throwing.
  IterationConfig big;
  big.max_steps = 10;
  auto blown = run_synchronous(scale_op(1, 1e200), ones(1), big);
  CHECK(blown.diverged());
  CHECK(blown.terminated_by == StopReason::kDivergence);
}

TEST_CASE("bernoulli masks") {
  CounterRng rng(100, streams::kMask);
  SUBCASE("p = 1 fires everything") {
    auto mask = bernoulli_mask(64, 1.0, rng);
    CHECK(mask.diag.sum() == 64.0);
  }
  SUBCASE("p = 0 fires nothing") {
    auto mask = bernoulli_mask(64, 0.0, rng);
    CHECK(mask.diag.sum() == 0.0);
  }
  SUBCASE("entries are exactly zero or one") {
    auto mask = bernoulli_mask(1000, 0.3, rng);
    for (Eigen::Index i = 0; i < mask.diag.size(); ++i)
      CHECK((mask.diag[i] == 0.0 || mask.diag[i] == 1.0));
  }
  SUBCASE("sample mean sits in the 3-sigma band") {
    auto mask = bernoulli_mask(100000, 0.5, rng);
    const double mean = mask.diag.sum() / 100000.0;
    CHECK(mean >= 0.494);
    CHECK(mean <= 0.506);
  }
  SUBCASE("p outside [0,1] rejected") {
    CHECK_THROWS_AS(bernoulli_mask(4, -0.1, rng), std::invalid_argument);
    CHECK_THROWS_AS(bernoulli_mask(4, 1.1, rng), std::invalid_argument);
  }
}

TEST_CASE("asynchronous p = 1 reproduces the synchronous trajectory bitwise") {
  CounterRng gen(42);
  auto t = make_affine(0.9 * gen.gaussian_matrix(4, 4) / 2.0,
                       gen.gaussian_vector(4));
  IterationConfig cfg;
  cfg.max_steps = 40;
  cfg.seed = 7;
  auto sync = run_synchronous(t, ones(4), cfg);
  cfg.protocol = Protocol::kAsynchronous;
  cfg.p = 1.0;
  auto async = run_asynchronous(t, ones(4), cfg);
  REQUIRE(sync.states.size() == async.states.size());
  for (std::size_t i = 0; i < sync.states.size(); ++i)
    CHECK(sync.states[i] == async.states[i]);
  for (std::size_t i = 0; i < sync.residuals.size(); ++i)
    CHECK(sync.residuals[i] == async.residuals[i]);
  CHECK(sync.equivalent_iterations == async.equivalent_iterations);
}

TEST_CASE("asynchronous p = 0 holds the state forever") {
  IterationConfig cfg;
  cfg.protocol = Protocol::kAsynchronous;
  cfg.p = 0.0;
  cfg.max_steps = 20;
  auto traj = run_asynchronous(scale_op(2, 0.5), ones(2), cfg);
  for (const auto& s : traj.states) CHECK(s == ones(2));
  for (double eq : traj.equivalent_iterations) CHECK(eq == 0.0);
}

TEST_CASE("every asynchronous coordinate is either held or fully updated") {
  CounterRng gen(43);
  auto t = make_affine(gen.gaussian_matrix(5, 5) / 3.0, gen.gaussian_vector(5));
  IterationConfig cfg;
  cfg.protocol = Protocol::kAsynchronous;
  cfg.p = 0.4;
  cfg.max_steps = 60;
  cfg.seed = 99;
  auto traj = run_asynchronous(t, ones(5), cfg);
  REQUIRE(traj.states.size() >= 2);
  // all recorded series share one length
  CHECK(traj.residuals.size() == traj.states.size());
  CHECK(traj.steps.size() == traj.states.size());
  CHECK(traj.equivalent_iterations.size() == traj.states.size());
  for (std::size_t n = 0; n + 1 < traj.states.size(); ++n) {
    const Eigen::VectorXd tv = t(traj.states[n]);
    for (Eigen::Index i = 0; i < 5; ++i) {
      const double next = traj.states[n + 1][i];
      CHECK((next == tv[i] || next == traj.states[n][i]));
    }
  }
}

TEST_CASE("equivalent iterations advance by p per step") {
  IterationConfig cfg;
  cfg.protocol = Protocol::kAsynchronous;
  cfg.p = 0.2;
  cfg.max_steps = 25;
  cfg.seed = 5;
  auto traj = run_asynchronous(scale_op(3, 0.5), ones(3), cfg);
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    CHECK(traj.equivalent_iterations[i] ==
          static_cast<double>(traj.steps[i]) * 0.2);
    if (i) CHECK(traj.equivalent_iterations[i] > traj.equivalent_iterations[i - 1]);
  }
}

TEST_CASE("identical seeds reproduce trajectories bitwise") {
  CounterRng gen(44);
  auto t = make_affine(gen.gaussian_matrix(6, 6) / 4.0, gen.gaussian_vector(6));
  IterationConfig cfg;
  cfg.protocol = Protocol::kAsynchronous;
  cfg.p = 0.5;
  cfg.max_steps = 80;
  cfg.seed = 1234;
  auto a = run_asynchronous(t, ones(6), cfg);
  auto b = run_asynchronous(t, ones(6), cfg);
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t i = 0; i < a.states.size(); ++i)
    CHECK(a.states[i] == b.states[i]);
}

TEST_CASE("one-step expectation: enumeration, identity, Monte Carlo") {
  CounterRng gen(45);
  const Eigen::Index k = 8;
  auto t = make_affine(gen.gaussian_matrix(k, k) / 3.0, gen.gaussian_vector(k));
  const Eigen::VectorXd v0 = gen.gaussian_vector(k);
  const Eigen::VectorXd vstar = gen.gaussian_vector(k);
  const double p = 0.35;

  const double exact = enumerate_one_step_expectation(t, v0, vstar, p);

  // For squared distance the coordinatewise process matches the two-point
  // total-expectation identity exactly (expectation is linear over
  // coordinates); for r = 1 it would only be a bound.
  const Eigen::VectorXd tv = t(v0);
  const double two_point = p * (tv - vstar).squaredNorm() +
                           (1.0 - p) * (v0 - vstar).squaredNorm();
  CHECK(exact == doctest::Approx(two_point).epsilon(1e-12));

  // Monte Carlo agreement within 3 standard errors.
  const std::int64_t n_mc = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (std::int64_t trial = 0; trial < n_mc; ++trial) {
    IterationConfig cfg;
    cfg.protocol = Protocol::kAsynchronous;
    cfg.p = p;
    cfg.max_steps = 1;
    cfg.seed = 777;
    cfg.trial = trial;
    auto traj = run_asynchronous(t, v0, cfg, &vstar);
    const double d2 = traj.distances.back() * traj.distances.back();
    sum += d2;
    sumsq += d2 * d2;
  }
  const double mean = sum / static_cast<double>(n_mc);
  const double var = sumsq / static_cast<double>(n_mc) - mean * mean;
  const double sigma = std::sqrt(std::max(var, 0.0) / static_cast<double>(n_mc));
  CHECK(std::abs(mean - exact) <= 3.0 * sigma + 1e-12);
}

TEST_CASE("async mean-square decay tracks (1 - p(1 - alpha^2))^n") {
  const Eigen::Index k = 25;
  auto t = scale_op(k, 0.5);  // alpha = 0.5, fixed point 0
  const double p = 0.5;
  const double factor = 1.0 - p * (1.0 - 0.25);  // 0.625
  const std::int64_t trials = 1000;
  const std::int64_t horizon = 15;

  std::vector<double> mean_sq(static_cast<std::size_t>(horizon) + 1, 0.0);
  const Eigen::VectorXd vstar = Eigen::VectorXd::Zero(k);
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    IterationConfig cfg;
    cfg.protocol = Protocol::kAsynchronous;
    cfg.p = p;
    cfg.max_steps = horizon;
    cfg.seed = 31337;
    cfg.trial = trial;
    auto traj = run_asynchronous(t, ones(k), cfg, &vstar);
    for (std::size_t i = 0; i < traj.distances.size(); ++i)
      mean_sq[i] += traj.distances[i] * traj.distances[i];
  }
  const double norm0 = static_cast<double>(k);
  for (std::int64_t n = 10; n <= horizon; ++n) {
    const double mc = mean_sq[static_cast<std::size_t>(n)] /
                      static_cast<double>(trials);
    const double bound = std::pow(factor, static_cast<double>(n)) * norm0;
    CHECK(mc == doctest::Approx(bound).epsilon(0.10));
  }
}

TEST_CASE("run_trials") {
  CounterRng gen(46);
  const Eigen::Index k = 4;
  auto t = make_affine(0.6 * gen.gaussian_matrix(k, k) / 2.0,
                       gen.gaussian_vector(k));
  const Eigen::VectorXd vstar =
      (Eigen::MatrixXd::Identity(k, k) - t.affine()->a)
          .partialPivLu()
          .solve(t.affine()->b);
  V0Sampler sampler = [k](CounterRng& rng) { return rng.sphere_vector(k); };

  IterationConfig cfg;
  cfg.protocol = Protocol::kAsynchronous;
  cfg.p = 0.5;
  cfg.max_steps = 50;
  cfg.seed = 2718;

  SUBCASE("n_trials = 1 equals the single trajectory") {
    auto agg = run_trials(t, sampler, cfg, 1, vstar);
    IterationConfig one = cfg;
    one.trial = 0;
    CounterRng init(cfg.seed, streams::kInit, 0);
    auto traj = run_asynchronous(t, sampler(init), one, &vstar);
    REQUIRE(agg.mean_distance.size() == traj.distances.size());
    for (std::size_t i = 0; i < traj.distances.size(); ++i)
      CHECK(agg.mean_distance[i] == traj.distances[i]);
  }
  SUBCASE("deterministic synchronous trials collapse to one curve") {
    IterationConfig sync = cfg;
    sync.protocol = Protocol::kSynchronous;
    V0Sampler fixed = [k](CounterRng&) { return Eigen::VectorXd::Ones(k); };
    auto agg = run_trials(t, fixed, sync, 7, vstar);
    IterationConfig one = sync;
    one.trial = 0;
    auto traj = run_synchronous(t, Eigen::VectorXd::Ones(k), one, &vstar);
    REQUIRE(agg.mean_distance.size() == traj.distances.size());
    for (std::size_t i = 0; i < traj.distances.size(); ++i)
      CHECK(agg.mean_distance[i] == doctest::Approx(traj.distances[i]).epsilon(1e-15));
  }
  SUBCASE("parallel reduction agrees with serial bitwise") {
    auto serial = run_trials(t, sampler, cfg, 64, vstar, 1);
    auto parallel = run_trials(t, sampler, cfg, 64, vstar, 4);
    REQUIRE(serial.mean_distance.size() == parallel.mean_distance.size());
    for (std::size_t i = 0; i < serial.mean_distance.size(); ++i) {
      CHECK(serial.mean_distance[i] == parallel.mean_distance[i]);
      CHECK(serial.mean_squared_distance[i] == parallel.mean_squared_distance[i]);
    }
  }
  SUBCASE("n_trials < 1 rejected") {
    CHECK_THROWS_AS(run_trials(t, sampler, cfg, 0, vstar),
                    std::invalid_argument);
  }
}
