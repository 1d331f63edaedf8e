#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "ccsp/experiments.hpp"
#include "ccsp/io.hpp"

namespace {

using namespace ccsp;

struct ProblemArgs {
  std::string name;
  std::int64_t k = -1;
  std::int64_t m = -1;
  std::int64_t q = -1;
  std::int64_t m_freq = -1;
  std::string fixture;
  std::uint64_t seed = 20240901;
};

void add_problem_options(CLI::App* cmd, ProblemArgs& args) {
  cmd->add_option("--problem", args.name, "problem registry name")
      ->required()
      ->check(CLI::IsMember(problem_names()));
  cmd->add_option("--k", args.k, "dimension");
  cmd->add_option("--m", args.m, "polytope face count (chebyshev)");
  cmd->add_option("--q", args.q, "filter half-order (minimax_filter)");
  cmd->add_option("--m-freq", args.m_freq, "frequency samples (minimax_filter)");
  cmd->add_option("--fixture", args.fixture,
                  "named fixture (unit_square, triangle, one_var, "
                  "representable, lowpass, random)");
  cmd->add_option("--seed", args.seed, "generation seed");
}

std::map<std::string, std::string> problem_params(const ProblemArgs& args) {
  std::map<std::string, std::string> params;
  if (args.k >= 0) params["k"] = std::to_string(args.k);
  if (args.m >= 0) params["m"] = std::to_string(args.m);
  if (args.q >= 0) params["q"] = std::to_string(args.q);
  if (args.m_freq >= 0) params["m_freq"] = std::to_string(args.m_freq);
  if (!args.fixture.empty()) params["fixture"] = args.fixture;
  return params;
}

Eigen::VectorXd parse_vector(const std::string& text, Eigen::Index dim) {
  std::vector<double> vals;
  std::istringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  if (static_cast<Eigen::Index>(vals.size()) != dim)
    throw CLI::ValidationError("--center",
                               "expected " + std::to_string(dim) + " entries");
  return Eigen::Map<Eigen::VectorXd>(vals.data(),
                                     static_cast<Eigen::Index>(vals.size()));
}

void print_vector_head(const Eigen::VectorXd& v, const char* name) {
  std::printf("%s =", name);
  const Eigen::Index show = std::min<Eigen::Index>(v.size(), 8);
  for (Eigen::Index i = 0; i < show; ++i) std::printf(" % .10g", v[i]);
  if (show < v.size())
    std::printf(" ... (%lld entries, norm %.10g)",
                static_cast<long long>(v.size()), v.norm());
  std::printf("\n");
}

int cmd_run(const std::string& target, const std::string& scale,
            const std::string& out_override, int threads) {
  ExperimentConfig cfg;
  bool is_preset = false;
  for (const auto& [name, desc] : preset_catalog())
    if (name == target) is_preset = true;
  if (is_preset) {
    cfg = preset(target, scale);
  } else {
    cfg = load_config(target);
    if (!scale.empty()) cfg.scale = scale;
  }
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (threads > 0) cfg.n_threads = threads;

  std::printf("running %s (scale %s, seed %llu) -> %s\n", cfg.problem.c_str(),
              cfg.scale.c_str(), static_cast<unsigned long long>(cfg.seed),
              cfg.out_dir.c_str());
  auto result = run_experiment(cfg);
  for (const auto& s : result.series) {
    const auto& d = s.data;
    std::printf(
        "  %s p=%-5g rho=%-5g points=%-6zu final mean dist %.6e (trials %lld)\n",
        s.protocol == Protocol::kSynchronous ? "sync " : "async", s.p, s.rho,
        d.mean_distance.size(),
        d.mean_distance.empty() ? 0.0 : d.mean_distance.back(),
        static_cast<long long>(d.trials));
  }
  std::printf("wrote %s/curves.csv and curves.svg (config hash %llx)\n",
              cfg.out_dir.c_str(),
              static_cast<unsigned long long>(result.config_hash));
  return 0;
}

int cmd_classify(const ProblemArgs& pargs, const std::string& center_text,
                 std::int64_t samples, const std::string& scales_text,
                 const std::string& out) {
  auto inst = make_problem(pargs.name, problem_params(pargs), pargs.seed);
  LemmaReportHints hints;
  hints.n_dirs = samples;
  hints.vstar = inst.vstar;
  hints.check_self_composition = pargs.name == "exp";
  if (!scales_text.empty()) {
    std::istringstream ss(scales_text);
    std::string tok;
    while (std::getline(ss, tok, ',')) hints.scales.push_back(std::stod(tok));
  }
  if (!center_text.empty())
    hints.centers.push_back(parse_vector(center_text, inst.op.dim()));
  const std::string report = lemma_report(inst.op, hints);
  std::fputs(report.c_str(), stdout);
  if (!out.empty()) {
    std::ofstream file(out);
    file << report;
    std::printf("wrote %s\n", out.c_str());
  }
  return 0;
}

int cmd_solve(const ProblemArgs& pargs, const std::string& protocol, double p,
              double rho, std::int64_t max_steps, double tol,
              const std::string& dump_dir) {
  auto inst = make_problem(pargs.name, problem_params(pargs), pargs.seed);
  if (!dump_dir.empty()) {
    save_problem(dump_dir, inst);
    std::printf("problem serialized to %s\n", dump_dir.c_str());
  }

  SystemOperator t = inst.op;
  if (rho > 0.0 && rho != 1.0) t = filtered(inst.op, rho);

  // Advisory check of the filter coefficient against the sampled
  // stability interval.
  if (rho > 0.0) {
    CounterRng probe(pargs.seed, streams::kProbe);
    const double scales[] = {1e-2, 1e-1, 1.0};
    auto cert = estimate_conic_everywhere(inst.op, 32, 64, scales, probe);
    if (cert) {
      std::optional<double> gamma;
      ConicClass klass = classify(*cert, cert->exact ? kExactBand : kSampledBand);
      if (klass == ConicClass::kExpansive && inst.vstar) {
        auto mix = estimate_mixing(inst.op, *inst.vstar, 256, scales, probe);
        gamma = mix.gamma_hat;
      }
      try {
        double alpha = cert->alpha_hat;
        if (klass == ConicClass::kPassive && !gamma) alpha = 1.0;
        const auto fi = stable_filter_interval(
            alpha, klass == ConicClass::kExpansive ? gamma : std::nullopt);
        if (rho >= fi.upper)
          std::printf("warning: rho=%g sits outside the stable interval (0, %g)\n",
                      rho, fi.upper);
      } catch (const HypothesisError&) {
      }
    }
  }

  IterationConfig cfg;
  cfg.protocol = protocol == "sync" ? Protocol::kSynchronous
                                    : Protocol::kAsynchronous;
  cfg.p = p;
  cfg.max_steps = max_steps;
  cfg.residual_tol = tol;
  cfg.seed = pargs.seed;
  cfg.record_states = false;

  const Eigen::VectorXd v0 = Eigen::VectorXd::Zero(inst.op.dim());
  cfg.record_states = true;
  auto traj = run(t, v0, cfg, inst.vstar ? &*inst.vstar : nullptr);

  const char* status = traj.diverged()
                           ? "diverged"
                           : (traj.terminated_by == StopReason::kToleranceReached
                                  ? "tolerance reached"
                                  : "max steps reached");
  std::printf("steps: %lld (%s)\n", static_cast<long long>(traj.steps_taken),
              status);
  std::printf("final residual: %.6e\n", traj.residuals.back());
  print_vector_head(traj.states.back(), "state");
  if (inst.vstar)
    std::printf("distance to reference fixed point: %.6e\n",
                traj.distances.back());
  if (inst.decode) {
    const Eigen::VectorXd x = inst.decode(traj.states.back());
    print_vector_head(x, "decoded");
    if (pargs.name == "chebyshev")
      std::printf("center norm %.10g, radius %.10g\n",
                  x.head(x.size() - 1).norm(), x[x.size() - 1]);
    if (pargs.name == "minimax_filter")
      std::printf("deviation delta %.10g\n", x[x.size() - 1]);
  }
  if (traj.distances.size() >= 10) {
    try {
      auto est = estimate_rate(traj);
      if (est.preferred == PreferredFit::kLinear && est.mu_hat)
        std::printf("rate estimate: linear, mu = %.6g (fit residual %.3g)\n",
                    *est.mu_hat, est.fit_residual);
      else if (est.preferred == PreferredFit::kPolynomial && est.order_q_hat)
        std::printf("rate estimate: polynomial, order = %.6g (fit residual %.3g)\n",
                    *est.order_q_hat, est.fit_residual);
      else
        std::printf("rate estimate: inconclusive\n");
    } catch (const std::exception& e) {
      std::printf("rate estimate unavailable: %s\n", e.what());
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conservative fixed-point experiment toolkit"};
  app.require_subcommand(1);

  // run
  std::string run_target, run_scale = "desk", run_out;
  int run_threads = 0;
  auto* run_cmd = app.add_subcommand("run", "execute a preset or config file");
  run_cmd->add_option("target", run_target, "preset name or config path")
      ->required();
  run_cmd->add_option("--scale", run_scale, "desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  run_cmd->add_option("--out", run_out, "output directory override");
  run_cmd->add_option("--threads", run_threads, "trial worker threads");

  // classify
  ProblemArgs cls_args;
  std::string cls_center, cls_out, cls_scales;
  std::int64_t cls_samples = 2000;
  auto* cls_cmd = app.add_subcommand("classify", "emit a lemma report");
  add_problem_options(cls_cmd, cls_args);
  cls_cmd->add_option("--center", cls_center, "probe center (comma list)");
  cls_cmd->add_option("--samples", cls_samples, "probe directions");
  cls_cmd->add_option("--scales", cls_scales,
                      "probe scales (comma list, default 1e-3..1e3)");
  cls_cmd->add_option("--out", cls_out, "write the report to a file");

  // solve
  ProblemArgs solve_args;
  std::string solve_protocol = "sync", solve_dump;
  double solve_p = 1.0, solve_rho = 0.0;
  std::int64_t solve_steps = 100000;
  double solve_tol = 1e-10;
  auto* solve_cmd = app.add_subcommand("solve", "single run to a fixed point");
  add_problem_options(solve_cmd, solve_args);
  solve_cmd->add_option("--protocol", solve_protocol, "sync or async")
      ->check(CLI::IsMember({"sync", "async"}));
  solve_cmd->add_option("--p", solve_p, "firing probability");
  solve_cmd->add_option("--rho", solve_rho, "filter coefficient (0 = direct)");
  solve_cmd->add_option("--max-steps", solve_steps, "step cap");
  solve_cmd->add_option("--tol", solve_tol, "residual stopping tolerance");
  solve_cmd->add_option("--dump-problem", solve_dump,
                        "serialize the instance to a directory");

  // presets
  auto* presets_cmd = app.add_subcommand("presets", "list figure presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run_target, run_scale, run_out, run_threads);
    if (*cls_cmd)
      return cmd_classify(cls_args, cls_center, cls_samples, cls_scales,
                          cls_out);
    if (*solve_cmd)
      return cmd_solve(solve_args, solve_protocol, solve_p, solve_rho,
                       solve_steps, solve_tol, solve_dump);
    if (*presets_cmd) {
      for (const auto& [name, desc] : preset_catalog())
        std::printf("%-8s %s\n", name.c_str(), desc.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
