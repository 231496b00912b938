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

#include "gaitforge/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "gaitforge/errors.hpp"

namespace gaitforge::qp {

void QpProblem::validate() const {
  const Eigen::Index n = linear.size();
  if (hessian.rows() != n || hessian.cols() != n) throw DimensionMismatch("QP Hessian must be n x n");
  if (ineq_matrix.rows() != ineq_bound.size()) throw DimensionMismatch("QP constraint rows disagree with bound");
  if (ineq_matrix.rows() > 0 && ineq_matrix.cols() != n) throw DimensionMismatch("QP constraint matrix must have n columns");
  if (n > 0 && (hessian - hessian.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw DimensionMismatch("QP Hessian must be symmetric");
  }
}

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal:
      return "optimal";
    case QpStatus::MaxIterations:
      return "max_iterations";
    case QpStatus::Infeasible:
      return "infeasible";
  }
  return "unknown";
}

double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& u, const Eigen::VectorXd& multipliers) {
  Eigen::VectorXd stationarity = problem.hessian * u + problem.linear;
  double primal = 0.0;
  double complementarity = 0.0;
  if (problem.num_constraints() > 0) {
    stationarity.noalias() += problem.ineq_matrix.transpose() * multipliers;
    const Eigen::VectorXd slack = problem.ineq_matrix * u - problem.ineq_bound;
    primal = std::max(slack.maxCoeff(), 0.0);
    complementarity = std::abs(multipliers.dot(slack));
  }
  const double station = stationarity.size() > 0 ? stationarity.lpNorm<Eigen::Infinity>() : 0.0;
  return std::max({station, primal, complementarity});
}

void QpSolver::index_rows(const Eigen::MatrixXd& g) {
  rows_.clear();
  cols_.clear();
  vals_.clear();
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    const int begin = static_cast<int>(cols_.size());
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      const double v = g(i, j);
      if (v != 0.0) {
        cols_.push_back(static_cast<int>(j));
        vals_.push_back(v);
      }
    }
    rows_.push_back({begin, static_cast<int>(cols_.size())});
  }
}

void QpSolver::multiply_g(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double acc = 0.0;
    for (int k = rows_[i].begin; k < rows_[i].end; ++k) acc += vals_[k] * x[cols_[k]];
    out[static_cast<Eigen::Index>(i)] = acc;
  }
}

void QpSolver::multiply_gt(const Eigen::VectorXd& y, Eigen::VectorXd& out) const {
  out.setZero();
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const double yi = y[static_cast<Eigen::Index>(i)];
    for (int k = rows_[i].begin; k < rows_[i].end; ++k) out[cols_[k]] += vals_[k] * yi;
  }
}

namespace {

/// Largest alpha in (0, 1] keeping v + alpha*dv >= 0.
double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

}  // namespace

QpSolution QpSolver::solve(const QpProblem& problem, const Eigen::VectorXd* warm_start) {
  const Eigen::Index n = problem.num_vars();
  const Eigen::Index m = problem.num_constraints();
  const Eigen::MatrixXd& hess = problem.hessian;
  const Eigen::VectorXd& c = problem.linear;
  const Eigen::VectorXd& h = problem.ineq_bound;
  problem.validate();

  QpSolution sol;
  sol.u = Eigen::VectorXd::Zero(n);
  sol.multipliers = Eigen::VectorXd::Zero(m);

  if (n == 0) {
    // Constraints reduce to 0 <= h.
    sol.status = (m == 0 || h.minCoeff() >= -config_.tolerance) ? QpStatus::Optimal : QpStatus::Infeasible;
    sol.kkt_residual = m == 0 ? 0.0 : std::max(-h.minCoeff(), 0.0);
    return sol;
  }

  // Shift H by the configured regularization once a factorization shows it
  // (or the KKT matrix built on it) is numerically singular.
  double reg = 0.0;
  auto needs_reg = [&]() {
    return llt_.info() != Eigen::Success || llt_.matrixLLT().diagonal().cwiseAbs2().minCoeff() < 1e-10;
  };

  if (m == 0) {
    kkt_ = hess;
    llt_.compute(kkt_);
    if (needs_reg()) {
      reg = config_.regularization;
      kkt_.diagonal().array() += reg;
      llt_.compute(kkt_);
    }
    sol.u = llt_.solve(-c);
    sol.kkt_residual = kkt_residual(problem, sol.u, sol.multipliers);
    sol.status = sol.kkt_residual <= config_.tolerance ? QpStatus::Optimal : QpStatus::MaxIterations;
    sol.iterations = 1;
    return sol;
  }

  index_rows(problem.ineq_matrix);

  Eigen::VectorXd u(n), s(m), lam(m), gu(m), tmp_n(n), tmp_m(m);
  Eigen::VectorXd r_d(n), r_p(m), r_c(m), rhs(n);
  Eigen::VectorXd du(n), ds(m), dlam(m), ds_aff(m), dlam_aff(m), w(m);

  auto factor = [&](const Eigen::VectorXd& weights) {
    kkt_ = hess;
    kkt_.diagonal().array() += reg;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const double wi = weights[static_cast<Eigen::Index>(i)];
      for (int a = rows_[i].begin; a < rows_[i].end; ++a) {
        const double va = wi * vals_[a];
        for (int b = rows_[i].begin; b < rows_[i].end; ++b) kkt_(cols_[a], cols_[b]) += va * vals_[b];
      }
    }
    llt_.compute(kkt_);
    if (reg == 0.0 && needs_reg()) {
      reg = config_.regularization;
      kkt_.diagonal().array() += reg;
      llt_.compute(kkt_);
    }
    double bump = std::max(reg, 1e-12);
    while (llt_.info() != Eigen::Success && bump < 1e-2) {
      kkt_.diagonal().array() += bump;
      bump *= 10.0;
      llt_.compute(kkt_);
    }
  };

  // Starting point: least-squares fit of the constraints, shifted into the interior.
  if (warm_start != nullptr && warm_start->size() == n) {
    u = *warm_start;
  } else {
    factor(Eigen::VectorXd::Ones(m));
    multiply_gt(h, tmp_n);
    u = llt_.solve(tmp_n - c);
  }
  multiply_g(u, gu);
  s = h - gu;
  const double shift_s = -s.minCoeff();
  if (shift_s >= 0.0) s.array() += 1.0 + shift_s;
  lam = gu - h;
  const double shift_l = -lam.minCoeff();
  if (shift_l >= 0.0) lam.array() += 1.0 + shift_l;

  const double lam_scale = 1.0 + lam.lpNorm<Eigen::Infinity>();
  double best_residual = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_u = u;
  Eigen::VectorXd best_lam = lam;

  for (int iter = 0; iter <= config_.max_iterations; ++iter) {
    multiply_g(u, gu);
    multiply_gt(lam, tmp_n);
    r_d.noalias() = hess * u;
    r_d += c + tmp_n;
    r_p = gu + s - h;

    const double station = r_d.lpNorm<Eigen::Infinity>();
    tmp_m = gu - h;
    const double primal = std::max(tmp_m.maxCoeff(), 0.0);
    const double comp = std::abs(lam.dot(tmp_m));
    const double residual = std::max({station, primal, comp});
    if (residual < best_residual) {
      best_residual = residual;
      best_u = u;
      best_lam = lam;
    }
    sol.iterations = iter;
    if (residual <= config_.tolerance) {
      sol.u = u;
      sol.multipliers = lam;
      sol.kkt_residual = residual;
      sol.status = QpStatus::Optimal;
      return sol;
    }
    if (iter == config_.max_iterations) break;

    // Farkas certificate: y >= 0, G'y ~ 0, h'y < 0 proves {Gu <= h} empty.
    const double lam_norm = lam.lpNorm<1>();
    if (lam.lpNorm<Eigen::Infinity>() > 1e6 * lam_scale) {
      multiply_gt(lam / lam_norm, tmp_n);
      if (tmp_n.lpNorm<Eigen::Infinity>() < 1e-6 && h.dot(lam) / lam_norm < -1e-9) {
        sol.u = u;
        sol.multipliers = lam;
        sol.kkt_residual = residual;
        sol.status = QpStatus::Infeasible;
        return sol;
      }
    }

    const double mu = s.dot(lam) / static_cast<double>(m);
    w = lam.cwiseQuotient(s);
    factor(w);

    // Predictor.
    tmp_m = w.cwiseProduct(r_p) - lam;
    multiply_gt(tmp_m, tmp_n);
    rhs = -r_d - tmp_n;
    du = llt_.solve(rhs);
    multiply_g(du, ds_aff);
    ds_aff = -r_p - ds_aff;
    dlam_aff = -(lam + w.cwiseProduct(ds_aff));

    const double alpha_aff = std::min(max_step(s, ds_aff), max_step(lam, dlam_aff));
    const double mu_aff = (s + alpha_aff * ds_aff).dot(lam + alpha_aff * dlam_aff) / static_cast<double>(m);
    const double sigma = std::pow(mu_aff / mu, 3);

    // Corrector.
    r_c = s.cwiseProduct(lam) + ds_aff.cwiseProduct(dlam_aff);
    r_c.array() -= sigma * mu;
    tmp_m = w.cwiseProduct(r_p) - r_c.cwiseQuotient(s);
    multiply_gt(tmp_m, tmp_n);
    rhs = -r_d - tmp_n;
    du = llt_.solve(rhs);
    multiply_g(du, ds);
    ds = -r_p - ds;
    dlam = -(r_c + lam.cwiseProduct(ds)).cwiseQuotient(s);

    const double alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(lam, dlam)));
    u += alpha * du;
    s += alpha * ds;
    lam += alpha * dlam;
  }

  sol.u = best_u;
  sol.multipliers = best_lam;
  sol.kkt_residual = best_residual;
  // Without a Farkas certificate an unfinished solve is only reported as such.
  sol.status = QpStatus::MaxIterations;
  return sol;
}

void dump_problem(const std::filesystem::path& path, const QpProblem& problem) {
  auto mat = [](const Eigen::MatrixXd& a) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(a.cols()));
      for (Eigen::Index j = 0; j < a.cols(); ++j) row[static_cast<std::size_t>(j)] = a(i, j);
      rows.push_back(row);
    }
    return rows;
  };
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::ordered_json j;
  j["hessian"] = mat(problem.hessian);
  j["linear"] = vec(problem.linear);
  j["ineq_matrix"] = mat(problem.ineq_matrix);
  j["ineq_bound"] = vec(problem.ineq_bound);
  std::ofstream out(path);
  if (!out) throw Error("cannot write QP dump: " + path.string());
  out << j.dump(1) << '\n';
}

QpProblem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read QP dump: " + path.string());
  QpProblem p;
  try {
    const auto j = nlohmann::json::parse(in);
    auto read_vec = [](const nlohmann::json& a) {
      const auto v = a.get<std::vector<double>>();
      return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    auto read_mat = [](const nlohmann::json& a, Eigen::Index cols) {
      Eigen::MatrixXd out(static_cast<Eigen::Index>(a.size()), cols);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const auto row = a[i].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != cols) throw DimensionMismatch("ragged matrix in QP dump");
        for (std::size_t k = 0; k < row.size(); ++k) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
      }
      return out;
    };
    p.linear = read_vec(j.at("linear"));
    p.hessian = read_mat(j.at("hessian"), p.linear.size());
    p.ineq_bound = read_vec(j.at("ineq_bound"));
    p.ineq_matrix = read_mat(j.at("ineq_matrix"), p.linear.size());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  p.validate();
  return p;
}

}  // namespace gaitforge::qp
