#include "ccsp/problems.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "ccsp/analysis.hpp"
#include "ccsp/io.hpp"
#include "ccsp/protocols.hpp"

namespace ccsp {

namespace {

constexpr double kPi = 3.14159265358979323846;

double get_double(const std::map<std::string, std::string>& params,
                  const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : std::stod(it->second);
}

Eigen::Index get_index(const std::map<std::string, std::string>& params,
                       const std::string& key, Eigen::Index fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback
                            : static_cast<Eigen::Index>(std::stoll(it->second));
}

std::string get_string(const std::map<std::string, std::string>& params,
                       const std::string& key, const std::string& fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

SystemOperator make_exp_operator(Eigen::MatrixXd q, Eigen::VectorXd f) {
  auto qm = std::make_shared<const Eigen::MatrixXd>(std::move(q));
  auto fv = std::make_shared<const Eigen::VectorXd>(std::move(f));
  return SystemOperator(
      fv->size(),
      [qm, fv](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return (-(*qm) * v).array().exp().matrix() + *fv;
      },
      "exp(-Qv)+f");
}

Eigen::VectorXd refine_sync(const SystemOperator& t, Eigen::VectorXd v,
                            std::int64_t max_steps, double tol, bool* ok) {
  *ok = false;
  for (std::int64_t n = 0; n < max_steps; ++n) {
    Eigen::VectorXd tv = t(v);
    if (!tv.allFinite()) return v;
    if ((tv - v).norm() <= tol) {
      *ok = true;
      return tv;
    }
    v = std::move(tv);
  }
  return v;
}

}  // namespace

Eigen::MatrixXd random_orthogonal(Eigen::Index k, CounterRng& rng) {
  if (k < 1) throw std::invalid_argument("dimension must be >= 1");
  while (true) {
    const Eigen::MatrixXd a = rng.gaussian_matrix(k, k);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues().minCoeff() <= 0.0) continue;  // singular draw
    return svd.matrixU() * svd.matrixV().transpose();
  }
}

Eigen::MatrixXd random_orthogonal_bounded(Eigen::Index k, double margin,
                                          CounterRng& rng,
                                          std::int64_t* attempts_out,
                                          std::int64_t max_attempts) {
  if (!(margin > 0.0 && margin < 1.0))
    throw std::invalid_argument("margin must lie in (0, 1)");
  for (std::int64_t attempt = 1; attempt <= max_attempts; ++attempt) {
    Eigen::MatrixXd q = random_orthogonal(k, rng);
    Eigen::EigenSolver<Eigen::MatrixXd> eig(q, false);
    const double closest =
        (eig.eigenvalues().array() + 1.0).abs().minCoeff();
    if (closest >= margin) {
      if (attempts_out) *attempts_out = attempt;
      return q;
    }
  }
  throw std::runtime_error(
      "random_orthogonal_bounded exceeded its attempt cap");
}

Eigen::MatrixXd random_orthogonal_near_identity(Eigen::Index k, double spread,
                                                double margin, CounterRng& rng,
                                                std::int64_t* attempts_out,
                                                std::int64_t max_attempts) {
  if (!(spread > 0.0))
    throw std::invalid_argument("spread must be positive");
  if (!(margin > 0.0 && margin < 2.0))
    throw std::invalid_argument("margin must lie in (0, 2)");
  for (std::int64_t attempt = 1; attempt <= max_attempts; ++attempt) {
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(k, k) + spread * rng.gaussian_matrix(k, k);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues().minCoeff() <= 0.0) continue;
    const Eigen::MatrixXd q = svd.matrixU() * svd.matrixV().transpose();
    Eigen::EigenSolver<Eigen::MatrixXd> eig(q, false);
    if ((eig.eigenvalues().array() + 1.0).abs().minCoeff() >= margin) {
      if (attempts_out) *attempts_out = attempt;
      return q;
    }
  }
  throw std::runtime_error(
      "random_orthogonal_near_identity exceeded its attempt cap");
}

ProblemInstance passive_source_problem(Eigen::Index k, CounterRng& rng) {
  if (k < 2)
    throw std::invalid_argument("passive source problem requires k >= 2");
  while (true) {
    Eigen::MatrixXd q = random_orthogonal(k, rng);
    const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(k, k);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ident - q);
    if (svd.singularValues().minCoeff() <= 1e-10) continue;  // eigenvalue at +1
    const Eigen::VectorXd f = rng.gaussian_vector(k);
    const Eigen::VectorXd vstar = (ident - q).partialPivLu().solve(f);

    ProblemInstance inst;
    inst.op = make_source(q, f);
    inst.vstar = vstar;
    inst.vstar_method = FixedPointMethod::kClosedForm;
    inst.metadata["kind"] = "passive_source";
    inst.metadata["k"] = std::to_string(k);
    inst.arrays["q"] = q;
    inst.arrays["f"] = f;
    if (residual(inst.op, vstar) > 1e-6)
      throw std::runtime_error("passive source reference fixed point failed verification");
    return inst;
  }
}

// Ensemble parameters for the exponential instances. A zero-mean
// Gaussian candidate ensemble produces rotations whose mixing blows the
// coordinatewise exponential up within a few steps at k >= 25 (measured:
// 0 convergent draws in 1000 at k = 50), so candidates are drawn near
// the identity and the offset is kept moderate; the eigenvalue margin
// check is unchanged.
inline constexpr double kExpRotationSpread = 0.08;
inline constexpr double kExpOffsetScale = 0.25;
inline constexpr double kExpEigenvalueMargin = 0.1;

ProblemInstance exp_problem(Eigen::Index k, CounterRng& rng) {
  if (k < 1) throw std::invalid_argument("dimension must be >= 1");
  for (int instance_attempt = 1; instance_attempt <= 50; ++instance_attempt) {
    std::int64_t attempts = 0;
    Eigen::MatrixXd q = random_orthogonal_near_identity(
        k, kExpRotationSpread, kExpEigenvalueMargin, rng, &attempts);
    Eigen::VectorXd f = kExpOffsetScale * rng.gaussian_vector(k);

    ProblemInstance inst;
    inst.op = make_exp_operator(q, f);
    bool ok = false;
    const Eigen::VectorXd vstar =
        refine_sync(inst.op, Eigen::VectorXd::Zero(k), 1000000, 1e-12, &ok);
    if (!ok) continue;  // flagged draw; regenerate
    inst.vstar = vstar;
    inst.vstar_method = FixedPointMethod::kHighPrecisionSync;
    inst.metadata["kind"] = "exp";
    inst.metadata["k"] = std::to_string(k);
    inst.metadata["rejection_attempts"] = std::to_string(attempts);
    inst.metadata["instance_attempts"] = std::to_string(instance_attempt);
    inst.arrays["q"] = q;
    inst.arrays["f"] = f;
    return inst;
  }
  throw std::runtime_error(
      "exp instance failed to reach residual 1e-12 within 1e6 steps");
}

Polytope random_polytope(Eigen::Index m, Eigen::Index k, CounterRng& rng) {
  if (m <= k) throw std::invalid_argument("random polytope requires m > k");
  Polytope poly;
  poly.a.resize(m + 2 * k, k);
  poly.b.resize(m + 2 * k);
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::VectorXd row = rng.gaussian_vector(k);
    while (row.norm() < 1e-12) row = rng.gaussian_vector(k);
    poly.a.row(i) = row.transpose() / row.norm();
    poly.b[i] = std::abs(rng.normal()) + 0.1;
  }
  // Safety envelope |v_i| <= 1e3; reported if ever active at a solution.
  poly.envelope_start = m;
  for (Eigen::Index i = 0; i < k; ++i) {
    poly.a.row(m + 2 * i).setZero();
    poly.a(m + 2 * i, i) = 1.0;
    poly.b[m + 2 * i] = 1e3;
    poly.a.row(m + 2 * i + 1).setZero();
    poly.a(m + 2 * i + 1, i) = -1.0;
    poly.b[m + 2 * i + 1] = 1e3;
  }
  return poly;
}

Polytope unit_square_polytope() {
  Polytope poly;
  poly.a.resize(4, 2);
  poly.a << 1, 0, -1, 0, 0, 1, 0, -1;
  poly.b.resize(4);
  poly.b << 1, 1, 1, 1;
  return poly;
}

Polytope triangle_polytope() {
  // x >= 0, y >= 0, x + y <= 1; incenter radius (2 - sqrt 2)/2.
  Polytope poly;
  poly.a.resize(3, 2);
  poly.a << -1, 0, 0, -1, 1, 1;
  poly.b.resize(3);
  poly.b << 0, 0, 1;
  return poly;
}

ProblemInstance chebyshev_problem(const Polytope& poly) {
  const Eigen::Index m = poly.a.rows();
  const Eigen::Index k = poly.a.cols();
  if (m < 1 || k < 1) throw std::invalid_argument("empty polytope");
  for (Eigen::Index i = 0; i < m; ++i)
    if (poly.a.row(i).norm() == 0.0)
      throw std::invalid_argument("polytope rows must be nonzero");

  LinearProgram lp;
  lp.a.resize(m + 1, k + 1);
  lp.b.resize(m + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    lp.a.row(i).head(k) = poly.a.row(i);
    lp.a(i, k) = poly.a.row(i).norm();
    lp.b[i] = poly.b[i];
  }
  lp.a.row(m).setZero();
  lp.a(m, k) = -1.0;  // r >= 0
  lp.b[m] = 0.0;
  lp.c = Eigen::VectorXd::Zero(k + 1);
  lp.c[k] = -1.0;  // maximize r

  const LpSolution ref = solve_lp_reference(lp);
  if (!ref.optimal)
    throw std::runtime_error(
        "chebyshev construction failed: reference LP did not solve "
        "(empty or unbounded polytope)");

  auto lpop = std::make_shared<const LpOperator>(lp);
  ProblemInstance inst;
  inst.op = lpop->op();
  inst.vstar = lpop->embed(ref.x, ref.slack, ref.y);
  inst.vstar_method = FixedPointMethod::kExternalOracle;
  auto shared = lpop;
  inst.decode = [shared](const Eigen::VectorXd& z) { return shared->decode(z); };
  inst.lp_op = lpop;
  inst.metadata["kind"] = "chebyshev";
  inst.metadata["k"] = std::to_string(k);
  inst.metadata["m"] = std::to_string(m);
  inst.metadata["envelope_start"] = std::to_string(poly.envelope_start);
  inst.metadata["reference_radius"] = format_full(ref.x[k]);
  inst.arrays["a"] = poly.a;
  inst.arrays["b"] = poly.b;
  if (residual(inst.op, *inst.vstar) > 1e-6)
    throw std::runtime_error("chebyshev reference fixed point failed verification");
  return inst;
}

FilterDesignSpec lowpass_filter_spec(Eigen::Index q, Eigen::Index m_freq,
                                     double pass_edge, double stop_edge) {
  if (!(pass_edge > 0.0 && pass_edge < stop_edge && stop_edge < kPi))
    throw std::invalid_argument("band edges must satisfy 0 < pass < stop < pi");
  FilterDesignSpec spec;
  spec.q = q;
  spec.m_freq = m_freq;
  const double len_pass = pass_edge;
  const double len_stop = kPi - stop_edge;
  Eigen::Index m_pass = static_cast<Eigen::Index>(
      std::llround(static_cast<double>(m_freq) * len_pass / (len_pass + len_stop)));
  m_pass = std::max<Eigen::Index>(1, std::min(m_freq - 1, m_pass));
  const Eigen::Index m_stop = m_freq - m_pass;

  Eigen::VectorXd grid(m_freq);
  for (Eigen::Index j = 0; j < m_pass; ++j)
    grid[j] = pass_edge * static_cast<double>(j) /
              static_cast<double>(std::max<Eigen::Index>(1, m_pass - 1));
  for (Eigen::Index j = 0; j < m_stop; ++j)
    grid[m_pass + j] = stop_edge + (kPi - stop_edge) * static_cast<double>(j) /
                                       static_cast<double>(std::max<Eigen::Index>(1, m_stop - 1));

  spec.d.resize(m_freq);
  spec.d.head(m_pass).setOnes();
  spec.d.tail(m_stop).setZero();
  spec.wvec = Eigen::VectorXd::Ones(m_freq);
  spec.f.resize(m_freq, q + 1);
  for (Eigen::Index j = 0; j < m_freq; ++j)
    for (Eigen::Index i = 0; i <= q; ++i)
      spec.f(j, i) = std::cos(grid[j] * static_cast<double>(i));
  return spec;
}

FilterDesignSpec representable_filter_spec(Eigen::Index q, Eigen::Index m_freq,
                                           const Eigen::VectorXd& h0) {
  if (h0.size() != q + 1)
    throw std::invalid_argument("h0 must have q+1 coefficients");
  FilterDesignSpec spec;
  spec.q = q;
  spec.m_freq = m_freq;
  spec.f.resize(m_freq, q + 1);
  for (Eigen::Index j = 0; j < m_freq; ++j) {
    const double w = kPi * static_cast<double>(j) /
                     static_cast<double>(std::max<Eigen::Index>(1, m_freq - 1));
    for (Eigen::Index i = 0; i <= q; ++i)
      spec.f(j, i) = std::cos(w * static_cast<double>(i));
  }
  spec.d = spec.f * h0;
  spec.wvec = Eigen::VectorXd::Ones(m_freq);
  return spec;
}

FilterDesignSpec one_var_filter_spec() {
  FilterDesignSpec spec;
  spec.q = 0;
  spec.m_freq = 2;
  spec.f.resize(2, 1);
  spec.f << 1, 1;
  spec.d.resize(2);
  spec.d << 0, 1;
  spec.wvec = Eigen::VectorXd::Ones(2);
  return spec;
}

ProblemInstance minimax_filter_problem(const FilterDesignSpec& spec) {
  const Eigen::Index mf = spec.m_freq;
  const Eigen::Index q = spec.q;
  if (mf < q + 1)
    throw std::invalid_argument("need at least q+1 frequency samples");
  if (spec.wvec.size() != mf || spec.d.size() != mf ||
      spec.f.rows() != mf || spec.f.cols() != q + 1)
    throw std::invalid_argument("inconsistent filter design data");
  if (spec.wvec.minCoeff() <= 0.0)
    throw std::invalid_argument("weights must be strictly positive");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(spec.f);
  if (qr.rank() < q + 1)
    throw std::invalid_argument("cosine basis is rank deficient on this grid");

  LinearProgram lp;
  const Eigen::Index n = q + 2;  // (h, delta)
  lp.a.resize(2 * mf + 1, n);
  lp.b.resize(2 * mf + 1);
  lp.a.topLeftCorner(mf, q + 1) = spec.f;
  lp.a.block(0, q + 1, mf, 1) = -spec.wvec;
  lp.a.block(mf, 0, mf, q + 1) = -spec.f;
  lp.a.block(mf, q + 1, mf, 1) = -spec.wvec;
  lp.a.row(2 * mf).setZero();
  lp.a(2 * mf, q + 1) = -1.0;  // delta >= 0
  lp.b.head(mf) = spec.d;
  lp.b.segment(mf, mf) = -spec.d;
  lp.b[2 * mf] = 0.0;
  lp.c = Eigen::VectorXd::Zero(n);
  lp.c[q + 1] = 1.0;  // minimize delta

  const LpSolution ref = solve_lp_reference(lp);
  if (!ref.optimal)
    throw std::runtime_error("minimax filter reference LP did not solve");

  auto lpop = std::make_shared<const LpOperator>(lp);
  ProblemInstance inst;
  inst.op = lpop->op();
  inst.vstar = lpop->embed(ref.x, ref.slack, ref.y);
  inst.vstar_method = FixedPointMethod::kExternalOracle;
  auto shared = lpop;
  inst.decode = [shared](const Eigen::VectorXd& z) { return shared->decode(z); };
  inst.lp_op = lpop;
  inst.metadata["kind"] = "minimax_filter";
  inst.metadata["q"] = std::to_string(q);
  inst.metadata["m_freq"] = std::to_string(mf);
  inst.metadata["reference_deviation"] = format_full(ref.x[q + 1]);
  inst.arrays["f"] = spec.f;
  inst.arrays["d"] = spec.d;
  inst.arrays["w"] = spec.wvec;
  if (residual(inst.op, *inst.vstar) > 1e-6)
    throw std::runtime_error("minimax reference fixed point failed verification");
  return inst;
}

const LpOperator* lp_operator_of(const ProblemInstance& inst) {
  return inst.lp_op.get();
}

SystemOperator named_map(const std::string& name, Eigen::Index k,
                         const std::map<std::string, double>& params) {
  auto get = [&](const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (name == "identity") return identity_operator(k);
  if (name == "zero")
    return make_affine(Eigen::MatrixXd::Zero(k, k), Eigen::VectorXd::Zero(k),
                       "zero");
  if (name == "scale") {
    const double a = get("a", 0.5);
    return make_affine(a * Eigen::MatrixXd::Identity(k, k),
                       Eigen::VectorXd::Zero(k), "scale");
  }
  if (name == "affine_scalar") {
    const double a = get("a", 0.5);
    const double b = get("b", 1.0);
    return make_affine(a * Eigen::MatrixXd::Identity(k, k),
                       b * Eigen::VectorXd::Ones(k), "affine_scalar");
  }
  if (name == "exp_neg") {
    return SystemOperator(
        k,
        [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
          return (-v.array()).exp().matrix();
        },
        "exp_neg");
  }
  throw std::invalid_argument("unknown map name: " + name);
}

std::vector<std::string> named_map_names() {
  return {"identity", "zero", "scale", "affine_scalar", "exp_neg"};
}

ProblemInstance make_problem(const std::string& name,
                             const std::map<std::string, std::string>& params,
                             std::uint64_t seed) {
  CounterRng rng(seed, streams::kProblem);
  ProblemInstance inst;
  if (name == "passive_source") {
    inst = passive_source_problem(get_index(params, "k", 25), rng);
  } else if (name == "exp") {
    inst = exp_problem(get_index(params, "k", 50), rng);
  } else if (name == "chebyshev") {
    const std::string fixture = get_string(params, "fixture", "random");
    Polytope poly;
    if (fixture == "unit_square") {
      poly = unit_square_polytope();
    } else if (fixture == "triangle") {
      poly = triangle_polytope();
    } else if (fixture == "random") {
      poly = random_polytope(get_index(params, "m", 40),
                             get_index(params, "k", 10), rng);
    } else {
      throw std::invalid_argument("unknown chebyshev fixture: " + fixture);
    }
    inst = chebyshev_problem(poly);
    inst.metadata["fixture"] = fixture;
  } else if (name == "minimax_filter") {
    const std::string fixture = get_string(params, "fixture", "lowpass");
    FilterDesignSpec spec;
    if (fixture == "one_var") {
      spec = one_var_filter_spec();
    } else if (fixture == "representable") {
      const Eigen::Index q = get_index(params, "q", 2);
      const Eigen::Index mf = get_index(params, "m_freq", 8);
      Eigen::VectorXd h0(q + 1);
      for (Eigen::Index i = 0; i <= q; ++i)
        h0[i] = 1.0 / static_cast<double>(i + 2);
      spec = representable_filter_spec(q, mf, h0);
    } else if (fixture == "lowpass") {
      spec = lowpass_filter_spec(get_index(params, "q", 35),
                                 get_index(params, "m_freq", 1000),
                                 get_double(params, "pass_edge", 0.4) * kPi,
                                 get_double(params, "stop_edge", 0.5) * kPi);
    } else {
      throw std::invalid_argument("unknown filter fixture: " + fixture);
    }
    inst = minimax_filter_problem(spec);
    inst.metadata["fixture"] = fixture;
  } else {
    throw std::invalid_argument("unknown problem: " + name);
  }
  inst.metadata["name"] = name;
  inst.metadata["seed"] = std::to_string(seed);
  for (const auto& [key, value] : params) inst.metadata["param." + key] = value;
  return inst;
}

std::vector<std::string> problem_names() {
  return {"passive_source", "exp", "chebyshev", "minimax_filter"};
}

void save_problem(const std::filesystem::path& dir,
                  const ProblemInstance& inst) {
  std::filesystem::create_directories(dir);
  std::map<std::string, std::string> meta = inst.metadata;
  switch (inst.vstar_method) {
    case FixedPointMethod::kClosedForm: meta["vstar_method"] = "closed-form"; break;
    case FixedPointMethod::kHighPrecisionSync:
      meta["vstar_method"] = "high-precision-sync";
      break;
    case FixedPointMethod::kExternalOracle:
      meta["vstar_method"] = "external-oracle";
      break;
  }
  save_key_values(dir / "metadata.txt", meta);
  for (const auto& [key, value] : inst.arrays)
    save_matrix_text(dir / (key + ".txt"), value);
  if (inst.vstar) save_vector_text(dir / "vstar.txt", *inst.vstar);
}

ProblemInstance load_problem(const std::filesystem::path& dir) {
  const auto meta = load_key_values(dir / "metadata.txt");
  const auto kind_it = meta.find("kind");
  if (kind_it == meta.end())
    throw std::runtime_error("problem directory lacks a kind entry");
  const std::string& kind = kind_it->second;

  ProblemInstance inst;
  if (kind == "passive_source") {
    const Eigen::MatrixXd q = load_matrix_text(dir / "q.txt");
    const Eigen::VectorXd f = load_vector_text(dir / "f.txt");
    inst.op = make_source(q, f);
    inst.vstar_method = FixedPointMethod::kClosedForm;
    inst.arrays["q"] = q;
    inst.arrays["f"] = f;
  } else if (kind == "exp") {
    const Eigen::MatrixXd q = load_matrix_text(dir / "q.txt");
    const Eigen::VectorXd f = load_vector_text(dir / "f.txt");
    inst.op = make_exp_operator(q, f);
    inst.vstar_method = FixedPointMethod::kHighPrecisionSync;
    inst.arrays["q"] = q;
    inst.arrays["f"] = f;
  } else if (kind == "chebyshev") {
    Polytope poly;
    poly.a = load_matrix_text(dir / "a.txt");
    poly.b = load_vector_text(dir / "b.txt");
    auto env = meta.find("envelope_start");
    if (env != meta.end()) poly.envelope_start = std::stoll(env->second);
    inst = chebyshev_problem(poly);
  } else if (kind == "minimax_filter") {
    FilterDesignSpec spec;
    spec.f = load_matrix_text(dir / "f.txt");
    spec.d = load_vector_text(dir / "d.txt");
    spec.wvec = load_vector_text(dir / "w.txt");
    spec.m_freq = spec.f.rows();
    spec.q = spec.f.cols() - 1;
    inst = minimax_filter_problem(spec);
  } else {
    throw std::runtime_error("unknown problem kind: " + kind);
  }
  for (const auto& [key, value] : meta) {
    if (key != "vstar_method") inst.metadata[key] = value;
  }
  if (std::filesystem::exists(dir / "vstar.txt"))
    inst.vstar = load_vector_text(dir / "vstar.txt");
  return inst;
}

}  // namespace ccsp
