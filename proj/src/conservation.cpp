#include "ccsp/conservation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "ccsp/io.hpp"

namespace ccsp {

CcspInstance make_ccsp(Eigen::MatrixXd g, SystemOperator m) {
  if (g.rows() != g.cols())
    throw std::invalid_argument("G must be square");
  if (m.dim() != g.rows())
    throw std::invalid_argument("map dimension does not match G");
  const double dev = isometry_deviation(g);
  if (!(dev <= kConservationTolerance)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", dev);
    throw OrthogonalityError(
        std::string("G is not orthogonal: ||G^T G - I||_F = ") + buf, dev);
  }
  CcspInstance inst{g.rows(), std::move(g), std::move(m)};
  CounterRng rng(0x77ccull);
  const double cdev = verify_conservation(inst, 256, rng);
  if (!(cdev <= kConservationTolerance)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", cdev);
    throw OrthogonalityError(
        std::string("conservation check failed: max deviation ") + buf, cdev);
  }
  return inst;
}

double conservation_deviation(const Eigen::MatrixXd& g, std::int64_t n_samples,
                              CounterRng& rng) {
  double worst = 0.0;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd c = rng.gaussian_vector(g.cols());
    const double nc = c.squaredNorm();
    if (nc == 0.0) continue;
    worst = std::max(worst, std::abs(nc - (g * c).squaredNorm()) / nc);
  }
  return worst;
}

double verify_conservation(const CcspInstance& inst, std::int64_t n_samples,
                           CounterRng& rng) {
  return conservation_deviation(inst.g, n_samples, rng);
}

SystemOperator ccsp_operator(const CcspInstance& inst) {
  SystemOperator gop = make_affine(inst.g, Eigen::VectorXd::Zero(inst.k), "G");
  gop.with_conic_alpha(1.0);
  return compose({std::move(gop), inst.m});
}

CcspSolution verify_solution(const CcspInstance& inst, const Eigen::VectorXd& c,
                             const Eigen::VectorXd& d, double tol) {
  if (c.size() != inst.k || d.size() != inst.k)
    throw std::invalid_argument("solution vectors do not match instance dimension");
  CcspSolution sol;
  sol.c_star = c;
  sol.d_star = d;
  sol.residual_subspace = (d - inst.g * c).norm();
  sol.residual_map = (c - inst.m(d)).norm();
  sol.accepted = sol.residual_subspace <= tol && sol.residual_map <= tol;
  return sol;
}

CcspInstance load_ccsp(const std::filesystem::path& g_file, SystemOperator m) {
  return make_ccsp(load_matrix_text(g_file), std::move(m));
}

// ---- text IO helpers ----

std::string format_full(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void save_matrix_text(const std::filesystem::path& path,
                      const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_full(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Eigen::MatrixXd load_matrix_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double x;
    while (ls >> x) row.push_back(x);
    if (row.empty()) continue;
    if (!rows.empty() && rows.front().size() != row.size())
      throw std::runtime_error("ragged matrix rows in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty matrix file " + path.string());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

void save_vector_text(const std::filesystem::path& path,
                      const Eigen::VectorXd& v) {
  save_matrix_text(path, v);
}

Eigen::VectorXd load_vector_text(const std::filesystem::path& path) {
  Eigen::MatrixXd m = load_matrix_text(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw std::runtime_error("expected a vector in " + path.string());
}

void save_key_values(const std::filesystem::path& path,
                     const std::map<std::string, std::string>& kv) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

std::map<std::string, std::string> load_key_values(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = val;
  }
  return kv;
}

}  // namespace ccsp
