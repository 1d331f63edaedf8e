#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccsp/analysis.hpp"
#include "ccsp/problems.hpp"
#include "ccsp/protocols.hpp"

namespace ccsp {

/// One series of a study: protocol, firing probability, and the filter
/// coefficient the operator ran under (1 means the direct operator).
struct GridPoint {
  Protocol protocol = Protocol::kAsynchronous;
  double p = 1.0;
  double rho = 1.0;
};

enum class OperatorForm { kDirect, kFiltered, kHomotopy };

struct ExperimentConfig {
  std::string problem;  // registry name
  std::map<std::string, std::string> problem_params;
  std::vector<GridPoint> grid;
  OperatorForm form = OperatorForm::kDirect;
  double rho = 0.5;  // used by filtered / homotopy forms
  std::int64_t n_trials = 1;
  std::int64_t max_steps = 1000;
  std::int64_t record_every = 1;
  std::uint64_t seed = 1;
  std::string v0_mode = "sphere";  // sphere | zero
  std::string out_dir = "out";
  std::string scale = "desk";  // desk | paper
  int n_threads = 1;
};

struct AggregateResult {
  struct Series {
    Protocol protocol = Protocol::kSynchronous;
    double p = 1.0;
    double rho = 1.0;
    AggregateSeries data;
  };
  std::vector<Series> series;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

std::uint64_t hash_config(const ExperimentConfig& cfg);

/// Builds the instance, applies the operator form per grid point, runs
/// the trial sweep, and writes CSV + SVG + metadata into out_dir.
AggregateResult run_experiment(const ExperimentConfig& cfg);

/// Header: protocol,p,rho,eq_iter,mean_dist,mean_sq_dist,trials
/// one row per recorded point, 17 significant digits.
void emit_csv(const AggregateResult& result, const std::filesystem::path& path);
AggregateResult parse_csv(const std::filesystem::path& path);

/// Log-distance vs equivalent-iterations curves, one per series, with a
/// "p=<value>" legend and decade ticks.
void emit_plot(const AggregateResult& result, const std::filesystem::path& path);

struct LemmaReportHints {
  std::vector<Eigen::VectorXd> centers;
  std::optional<Eigen::VectorXd> vstar;
  std::int64_t n_dirs = 2000;
  std::int64_t n_centers = 64;
  std::vector<double> scales;  // empty: default probe scales
  std::uint64_t seed = 2024;
  bool check_self_composition = false;
};

/// Text report (key = value lines) of which lemma hypotheses the
/// operator satisfies on samples: conic estimates about the supplied
/// centers and everywhere, classification, entrapment balls, stable
/// filter intervals, and the mixing bound when a fixed point is given.
std::string lemma_report(const SystemOperator& t, const LemmaReportHints& hints);

/// Plain-text config: one `key = value` per line, '#' comments, vectors
/// as comma lists. The CCSP_SEED environment variable overrides seed.
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// Figure presets: fig6, fig7, fig8, fig10, at desk or paper scale.
ExperimentConfig preset(const std::string& name, const std::string& scale);
std::vector<std::pair<std::string, std::string>> preset_catalog();

}  // namespace ccsp
