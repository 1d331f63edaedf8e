#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>

#include "ccsp/operators.hpp"
#include "ccsp/rng.hpp"

namespace ccsp {

/// Conservative constraint-satisfaction instance: an orthogonal G pairing
/// the variables c and d = G c, and a (generally nonlinear) map m with
/// c = m(d). Construction verifies orthogonality exactly and the
/// norm-conservation property by sampling.
struct CcspInstance {
  Eigen::Index k = 0;
  Eigen::MatrixXd g;
  SystemOperator m;
};

inline constexpr double kConservationTolerance = 1e-8;

CcspInstance make_ccsp(Eigen::MatrixXd g, SystemOperator m);

/// Max over sampled c of | ||c||^2 - ||G c||^2 | / ||c||^2.
double conservation_deviation(const Eigen::MatrixXd& g, std::int64_t n_samples,
                              CounterRng& rng);
double verify_conservation(const CcspInstance& inst, std::int64_t n_samples,
                           CounterRng& rng);

/// Companion fixed-point operator T(c) = m(G c). State lives in
/// c-coordinates; d recovers as G c. Inherits m's conic certificate
/// (composition with the neutral G).
SystemOperator ccsp_operator(const CcspInstance& inst);

struct CcspSolution {
  Eigen::VectorXd c_star;
  Eigen::VectorXd d_star;
  double residual_subspace = 0.0;  // ||d - G c||
  double residual_map = 0.0;       // ||c - m(d)||
  bool accepted = false;
};

/// Accepts iff both residuals are within tol; the residual pair is
/// reported either way.
CcspSolution verify_solution(const CcspInstance& inst, const Eigen::VectorXd& c,
                             const Eigen::VectorXd& d, double tol);

/// Builds an instance from a dense row-major text file holding G.
CcspInstance load_ccsp(const std::filesystem::path& g_file, SystemOperator m);

}  // namespace ccsp
