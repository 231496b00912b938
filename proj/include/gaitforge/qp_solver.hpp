// Copyright 2026 The gaitforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GAITFORGE_QP_SOLVER_HPP_
#define GAITFORGE_QP_SOLVER_HPP_

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gaitforge::qp {

/// minimize 1/2 u'Hu + c'u  subject to  G u <= h.
struct QpProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd ineq_bound;

  Eigen::Index num_vars() const { return linear.size(); }
  Eigen::Index num_constraints() const { return ineq_bound.size(); }
  double objective(const Eigen::VectorXd& u) const { return 0.5 * u.dot(hessian * u) + linear.dot(u); }

  /// Throws DimensionMismatch on inconsistent sizes or an asymmetric Hessian.
  void validate() const;
};

enum class QpStatus { Optimal, MaxIterations, Infeasible };

std::string_view to_string(QpStatus status);

struct QpSolution {
  Eigen::VectorXd u;
  Eigen::VectorXd multipliers;
  QpStatus status = QpStatus::MaxIterations;
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct QpConfig {
  double tolerance = 1e-8;
  int max_iterations = 60;
  /// Added to the Hessian diagonal when it is numerically singular.
  double regularization = 1e-8;
};

/// max(||Hu + c + G'lambda||_inf, max(Gu - h)_+, |lambda'(Gu - h)|).
double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& u, const Eigen::VectorXd& multipliers);

/**
 * Dense primal-dual interior-point solver with Mehrotra predictor-corrector
 * steps. Constraint rows are scanned once per solve and treated as sparse,
 * so G'WG costs O(nnz per row ^ 2) per row. Holds a reusable workspace;
 * one instance per thread.
 */
class QpSolver {
 public:
  explicit QpSolver(QpConfig config = {}) : config_(config) {}

  const QpConfig& config() const { return config_; }

  /// `warm_start`, when given, seeds the primal iterate.
  QpSolution solve(const QpProblem& problem, const Eigen::VectorXd* warm_start = nullptr);

 private:
  struct SparseRow {
    int begin;
    int end;
  };

  void index_rows(const Eigen::MatrixXd& g);
  void multiply_g(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
  void multiply_gt(const Eigen::VectorXd& y, Eigen::VectorXd& out) const;

  QpConfig config_;
  std::vector<SparseRow> rows_;
  std::vector<int> cols_;
  std::vector<double> vals_;
  Eigen::MatrixXd kkt_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Writes the problem as JSON for offline reproduction.
void dump_problem(const std::filesystem::path& path, const QpProblem& problem);
QpProblem load_problem(const std::filesystem::path& path);

}  // namespace gaitforge::qp

#endif  // GAITFORGE_QP_SOLVER_HPP_
