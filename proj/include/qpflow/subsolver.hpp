// Copyright 2026 The qpflow Authors
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

#ifndef QPFLOW_SUBSOLVER_HPP
#define QPFLOW_SUBSOLVER_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qpflow/common.hpp"
#include "qpflow/graph.hpp"
#include "qpflow/residual.hpp"

namespace qpflow {

struct SubsolverConfig {
  double inner_tol = 1e-10;          // additive bound on the reduced objective
  int max_newton_iters = 200;
  double backtrack_factor = 0.5;
  double sufficient_decrease = 1e-4;
  double grad_norm_stop = 1e-12;

  void validate() const {
    if (!(inner_tol > 0.0) || !(inner_tol < 1.0)) throw DomainError("inner_tol in (0, 1)");
    if (max_newton_iters <= 0) throw DomainError("max_newton_iters must be positive");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
      throw DomainError("backtrack_factor in (0, 1)");
    }
    if (!(sufficient_decrease > 0.0) || !(grad_norm_stop > 0.0)) {
      throw DomainError("line-search parameters must be positive");
    }
  }
};

struct CommoditySolve {
  Eigen::VectorXd flow;        // edge-space circulation (exact basis combination)
  double value = 0.0;          // sum_e c_ej(flow_e), never above 0
  double err_bound = 0.0;      // claimed additive distance to the reduced optimum
  int iterations = 0;
  bool curvature_certified = false;  // err_bound backed by a strong-convexity floor
  bool warning = false;              // hit the iteration cap without a stop criterion
  std::string stop_reason;
};

namespace detail {

// Global lower bound on c_ej'' over all of R. The quadratic branch is
// minimized at x = 0; the power branch a|x|^{q-2} + b|x|^{pq-2} is
// unimodal on its domain |x| >= f/scale.
inline double curvature_floor(const ResidualModel& model, int e, int j) {
  const double B = model.gamma_coef[e];
  const double C = model.power_coef[e];
  const double f = model.anchor(e, j);
  const double s = model.scale;
  const double q = model.params.q;
  const double pq = model.params.pq();
  const double a = B * pow_abs(s, q) * q * (q - 1.0);
  const double b = C * pq * (pq - 1.0);

  const double t0 = f / s;  // power branch starts here
  auto power_branch = [&](double t) { return a * pow_abs(t, q - 2.0) + b * pow_abs(t, pq - 2.0); };

  double branch2;
  if (q == 2.0) {
    branch2 = a + (f > 0.0 ? b * pow_abs(t0, pq - 2.0) : 0.0);
  } else if (a == 0.0) {
    branch2 = b * pow_abs(t0, pq - 2.0);  // 0 when f = 0
  } else {
    const double interior = std::pow(a * (2.0 - q) / (b * (pq - 2.0)), 1.0 / (pq - q));
    branch2 = power_branch(std::max(interior, t0));
  }
  if (f == 0.0) return branch2;
  const double branch1 = B * q * pow_abs(f, q - 2.0) * s * s;
  return std::min(branch1, branch2);
}

}  // namespace detail

/// Minimizes sum_e c_ej(x_e) over circulations for one commodity. The search
/// runs in cycle-basis coordinates, so every iterate is a circulation by
/// construction: damped Newton with backtracking, falling back to the
/// gradient direction when the reduced Hessian is unusable.
inline CommoditySolve solve_commodity(const Graph& graph, const CycleBasis& basis,
                                      const ResidualModel& model, int j,
                                      const SubsolverConfig& cfg) {
  cfg.validate();
  if (j < 0 || j >= model.commodity_count()) throw DimensionError("commodity out of range");
  const int m = graph.edge_count();
  const int ncyc = static_cast<int>(basis.cycles.size());

  CommoditySolve result;
  result.flow = Eigen::VectorXd::Zero(m);
  if (ncyc == 0) {
    result.curvature_certified = true;
    result.stop_reason = "no circulation freedom";
    return result;
  }

  // Edges touched by at least one basis cycle; everything else stays 0.
  const auto incidence = basis.edge_incidence(m);
  std::vector<int> support;
  for (int e = 0; e < m; ++e) {
    if (!incidence[e].empty()) support.push_back(e);
  }

  auto edge_flow = [&](const Eigen::VectorXd& theta) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
    for (int c = 0; c < ncyc; ++c) {
      if (theta[c] == 0.0) continue;
      for (const auto& [e, sg] : basis.cycles[c].entries) x[e] += sg * theta[c];
    }
    return x;
  };
  auto eval = [&](const Eigen::VectorXd& x) {
    KahanSum sum;
    for (int e : support) sum.add(cost_value(model, e, j, x[e]));
    return sum.value();
  };

  // Strong-convexity floor of the reduced problem; positive whenever every
  // cycle passes through an edge with curvature bounded away from zero.
  double min_curvature = 0.0;
  {
    Eigen::MatrixXd floor_matrix = Eigen::MatrixXd::Zero(ncyc, ncyc);
    for (int e : support) {
      const double mu = detail::curvature_floor(model, e, j);
      if (mu <= 0.0 || !std::isfinite(mu)) continue;
      for (const auto& [ca, sa] : incidence[e]) {
        for (const auto& [cb, sb] : incidence[e]) {
          floor_matrix(ca, cb) += mu * sa * sb;
        }
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(floor_matrix, Eigen::EigenvaluesOnly);
    min_curvature = std::max(0.0, eig.eigenvalues().minCoeff());
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(ncyc);
  Eigen::VectorXd x = edge_flow(theta);
  double value = 0.0;

  // Stop bookkeeping. The strong-convexity bound ||grad||^2 / (2 mu) is
  // rigorous whenever mu > 0; when it is weaker than inner_tol the claim
  // falls back to the stagnation convention (the iterate sits at the
  // floating-point floor of achievable decrease).
  auto finish = [&](const std::string& reason, double grad_sq) {
    result.flow = x;
    result.value = value;
    result.stop_reason = reason;
    const double curvature_bound = min_curvature > 0.0
                                       ? grad_sq / (2.0 * min_curvature)
                                       : std::numeric_limits<double>::infinity();
    result.curvature_certified = curvature_bound <= cfg.inner_tol;
    result.err_bound = std::min(curvature_bound, cfg.inner_tol);
    return result;
  };

  Eigen::VectorXd grad(ncyc), direction(ncyc);
  Eigen::VectorXd first(m), second(m);
  auto refresh_derivatives = [&](const Eigen::VectorXd& at) {
    for (int e : support) {
      const CostDerivatives d = cost_derivatives(model, e, j, at[e]);
      first[e] = d.first;
      double h = d.second;
      if (!std::isfinite(h)) {
        // q < 2 zero-anchor coordinate: evaluate the curvature a step away
        // from the singularity; the line search keeps this safe.
        h = cost_derivatives(model, e, j, 1e-8).second;
      }
      second[e] = h;
    }
    for (int c = 0; c < ncyc; ++c) {
      KahanSum sum;
      for (const auto& [e, sg] : basis.cycles[c].entries) sum.add(sg * first[e]);
      grad[c] = sum.value();
    }
  };

  for (int iter = 0; iter < cfg.max_newton_iters; ++iter) {
    result.iterations = iter;
    refresh_derivatives(x);
    const double grad_sq = grad.squaredNorm();

    if (min_curvature > 0.0 && grad_sq <= 2.0 * min_curvature * cfg.inner_tol) {
      return finish("curvature certificate", grad_sq);
    }
    if (grad.lpNorm<Eigen::Infinity>() <= cfg.grad_norm_stop) {
      return finish("gradient norm", grad_sq);
    }

    Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(ncyc, ncyc);
    for (int e : support) {
      if (second[e] == 0.0) continue;
      for (const auto& [ca, sa] : incidence[e]) {
        for (const auto& [cb, sb] : incidence[e]) {
          hessian(ca, cb) += second[e] * sa * sb;
        }
      }
    }
    direction = -hessian.ldlt().solve(grad);
    if (!direction.allFinite() || direction.dot(grad) >= 0.0) {
      direction = -grad;
    }

    // Backtracking Armijo line search.
    double step = 1.0;
    const double slope = direction.dot(grad);
    bool accepted = false;
    Eigen::VectorXd theta_next, x_next;
    double value_next = value;
    for (int ls = 0; ls < 64; ++ls) {
      theta_next = theta + step * direction;
      x_next = edge_flow(theta_next);
      value_next = eval(x_next);
      if (value_next <= value + cfg.sufficient_decrease * step * slope) {
        accepted = true;
        break;
      }
      step *= cfg.backtrack_factor;
    }
    if (!accepted) {
      return finish("line-search stagnation", grad_sq);
    }
    const double step_size = (step * direction).lpNorm<Eigen::Infinity>();
    theta = theta_next;
    x = x_next;
    value = value_next;
    if (step_size <= 1e-14 * (1.0 + theta.lpNorm<Eigen::Infinity>())) {
      refresh_derivatives(x);
      return finish("step stagnation", grad.squaredNorm());
    }
  }

  refresh_derivatives(x);
  result.iterations = cfg.max_newton_iters;
  result.flow = x;
  result.value = value;
  result.warning = true;
  result.stop_reason = "iteration cap";
  result.err_bound = min_curvature > 0.0 ? grad.squaredNorm() / (2.0 * min_curvature)
                                         : std::numeric_limits<double>::infinity();
  result.curvature_certified = false;
  return result;
}

struct ResidualSolve {
  FlowMatrix step;          // edges x commodities, zero residues by construction
  double value = 0.0;       // R(step; anchor)
  double err_bound = 0.0;   // sum of per-commodity bounds
  bool warning = false;
  std::vector<CommoditySolve> per_commodity;
};

/// Solves the k decoupled circulation problems of a residual model; commodity
/// solves are independent and run concurrently.
inline ResidualSolve solve_residual(const Graph& graph, const CycleBasis& basis,
                                    const ResidualModel& model, const SubsolverConfig& cfg,
                                    int threads = 1) {
  const int k = model.commodity_count();
  ResidualSolve out;
  out.per_commodity.resize(k);
  std::exception_ptr failure;
  parallel_chunks(k, 1, threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t j = begin; j < end; ++j) {
      try {
        out.per_commodity[j] = solve_commodity(graph, basis, model, static_cast<int>(j), cfg);
      } catch (...) {
        failure = std::current_exception();
      }
    }
  });
  if (failure) std::rethrow_exception(failure);

  out.step.resize(graph.edge_count(), k);
  KahanSum value, err;
  for (int j = 0; j < k; ++j) {
    out.step.col(j) = out.per_commodity[j].flow;
    value.add(out.per_commodity[j].value);
    err.add(out.per_commodity[j].err_bound);
    out.warning = out.warning || out.per_commodity[j].warning;
  }
  out.value = value.value();
  out.err_bound = err.value();
  return out;
}

}  // namespace qpflow

#endif  // QPFLOW_SUBSOLVER_HPP
