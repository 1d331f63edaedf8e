#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <string>

namespace ccsp {

/// Dense matrix as whitespace-separated text, one row per line.
void save_matrix_text(const std::filesystem::path& path,
                      const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix_text(const std::filesystem::path& path);

void save_vector_text(const std::filesystem::path& path,
                      const Eigen::VectorXd& v);
Eigen::VectorXd load_vector_text(const std::filesystem::path& path);

/// One `key = value` per line; '#' starts a comment.
void save_key_values(const std::filesystem::path& path,
                     const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> load_key_values(
    const std::filesystem::path& path);

std::string format_full(double x);  // 17 significant digits

}  // namespace ccsp
