#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccsp/lp.hpp"
#include "ccsp/operators.hpp"
#include "ccsp/rng.hpp"

namespace ccsp {

enum class FixedPointMethod { kClosedForm, kHighPrecisionSync, kExternalOracle };

/// A generated experiment instance: the operator under study, a
/// reference fixed point (residual <= 1e-6 when present), how that
/// reference was obtained, and an optional decode map extracting the
/// underlying optimization variables from a state vector.
struct ProblemInstance {
  SystemOperator op;
  std::optional<Eigen::VectorXd> vstar;
  FixedPointMethod vstar_method = FixedPointMethod::kClosedForm;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> decode;
  std::map<std::string, std::string> metadata;
  std::map<std::string, Eigen::MatrixXd> arrays;  // generation data, serialized
  std::shared_ptr<const LpOperator> lp_op;        // set for LP-derived instances
};

/// Half-space polytope {v : a v <= b}. Rows appended by the random
/// generator beyond `envelope_start` are the safety box |v_i| <= 1e3.
struct Polytope {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::Index envelope_start = -1;  // -1: no envelope rows
};

/// Frequency-sampled minimax filter design data: impulse response
/// support [0, 2q] with cosine basis f(j, i) = cos(w_j * i).
struct FilterDesignSpec {
  Eigen::Index q = 0;
  Eigen::Index m_freq = 0;
  Eigen::VectorXd d;     // target response on the grid
  Eigen::VectorXd wvec;  // strictly positive weights
  Eigen::MatrixXd f;     // m_freq x (q+1) cosine basis
};

/// Gaussian draw projected to its nearest orthogonal matrix (polar
/// factor, Frobenius sense).
Eigen::MatrixXd random_orthogonal(Eigen::Index k, CounterRng& rng);

/// Rejection-samples random_orthogonal until every eigenvalue satisfies
/// |lambda + 1| >= margin. attempts_out, when given, receives the count.
Eigen::MatrixXd random_orthogonal_bounded(Eigen::Index k, double margin,
                                          CounterRng& rng,
                                          std::int64_t* attempts_out = nullptr,
                                          std::int64_t max_attempts = 10000);

/// Polar factor of I + spread * G for Gaussian G, rejected until every
/// eigenvalue satisfies |lambda + 1| >= margin. Small spreads give small
/// rotation angles, i.e. eigenvalues clustered near +1.
Eigen::MatrixXd random_orthogonal_near_identity(
    Eigen::Index k, double spread, double margin, CounterRng& rng,
    std::int64_t* attempts_out = nullptr, std::int64_t max_attempts = 10000);

/// T(v) = Q v + f, passive everywhere; the reference fixed point solves
/// (I - Q) v = f directly.
ProblemInstance passive_source_problem(Eigen::Index k, CounterRng& rng);

/// T(v) = exp(-Q v) + f coordinatewise, Q bounded away from -1; the
/// reference fixed point comes from high-precision synchronous
/// iteration (residual <= 1e-12).
ProblemInstance exp_problem(Eigen::Index k, CounterRng& rng);

/// Gaussian-normal rows, origin strictly interior, safety box appended.
Polytope random_polytope(Eigen::Index m, Eigen::Index k, CounterRng& rng);

Polytope unit_square_polytope();
Polytope triangle_polytope();

/// Largest inscribed ball of the polytope as an LP fixed-point problem.
/// decode yields (center..., radius); vstar embeds the reference
/// primal-dual pair from the simplex oracle.
ProblemInstance chebyshev_problem(const Polytope& poly);

FilterDesignSpec lowpass_filter_spec(Eigen::Index q, Eigen::Index m_freq,
                                     double pass_edge, double stop_edge);
FilterDesignSpec representable_filter_spec(Eigen::Index q, Eigen::Index m_freq,
                                           const Eigen::VectorXd& h0);
FilterDesignSpec one_var_filter_spec();

/// Weighted minimax filter design as an LP fixed-point problem; decode
/// yields (h..., delta).
ProblemInstance minimax_filter_problem(const FilterDesignSpec& spec);

/// Shared access to the LP structure behind an LP-derived instance.
const LpOperator* lp_operator_of(const ProblemInstance& inst);

/// Named simple maps for CCSP construction and the CLI: identity, zero,
/// scale (a), affine_scalar (a, b), exp_neg.
SystemOperator named_map(const std::string& name, Eigen::Index k,
                         const std::map<std::string, double>& params = {});
std::vector<std::string> named_map_names();

/// Registry entry point used by the CLI and the experiment harness.
/// Names: passive_source, exp, chebyshev, minimax_filter.
ProblemInstance make_problem(const std::string& name,
                             const std::map<std::string, std::string>& params,
                             std::uint64_t seed);
std::vector<std::string> problem_names();

/// Directory serialization: matrices as row-major text, metadata as
/// key/value text, the operator identified by registry name + params.
void save_problem(const std::filesystem::path& dir, const ProblemInstance& inst);
ProblemInstance load_problem(const std::filesystem::path& dir);

}  // namespace ccsp
