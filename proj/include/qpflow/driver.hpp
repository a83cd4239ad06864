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

#ifndef QPFLOW_DRIVER_HPP
#define QPFLOW_DRIVER_HPP

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qpflow/common.hpp"
#include "qpflow/graph.hpp"
#include "qpflow/objective.hpp"
#include "qpflow/residual.hpp"
#include "qpflow/subsolver.hpp"

namespace qpflow {

struct DriverConfig {
  double eps = 1e-3;          // target relative accuracy
  long max_outer_iters = 0;   // 0: use the derived cap p * lambda * log(m / eps)
  double stop_tol = 0.0;      // > 0 overrides the eps-derived gap threshold
  SubsolverConfig subsolver;
  int threads = 1;
  std::uint64_t seed = 0;     // echoed into the report; the solve itself is deterministic

  void validate() const {
    if (!(eps > 0.0) || !(eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
    if (max_outer_iters < 0) throw DomainError("max_outer_iters must be nonnegative");
    subsolver.validate();
  }
};

struct PhaseTimings {
  double initializer_seconds = 0.0;
  double subsolve_seconds = 0.0;
  double certificate_seconds = 0.0;
  double line_search_seconds = 0.0;
  double total_seconds = 0.0;
};

struct ReportParams {
  double q = 0.0;
  double p = 0.0;
  int k = 0;
  double eps = 0.0;
  double inner_tol = 0.0;
  long max_outer_iters = 0;
  int threads = 1;
  std::uint64_t seed = 0;
  int vertices = 0;
  int edges = 0;
  double lambda = 0.0;
};

/// Per-iteration trace of a refinement run. Row t describes the state at
/// F^(t) before any update: objective, residual value of the subsolve at
/// F^(t), the certified gap bound, and the feasibility residue.
struct SolveReport {
  std::vector<double> objective_trace;
  std::vector<double> residual_trace;
  std::vector<double> gap_bounds;
  std::vector<double> feasibility_residual;
  std::vector<double> iteration_seconds;
  long iterations = 0;  // refinement updates applied = rows - 1
  std::string terminated;
  bool subsolver_warnings = false;
  PhaseTimings timings;
  ReportParams params;
};

/// Feasible start: per-commodity electrical flow minimizing
/// sum_e w_e^2 x_e^2 subject to residues = d_j, via the weighted Laplacian
/// normal equations (one vertex grounded per component, LDLT, one round of
/// iterative refinement).
inline FlowMatrix initial_flow(const Graph& graph, const DemandMatrix& demands) {
  const ValidationReport validation = validate_instance(graph, demands);
  if (!validation.ok) {
    std::string msg = "infeasible demands:";
    for (const auto& v : validation.violations) {
      msg += " (component " + std::to_string(v.component) + ", commodity " +
             std::to_string(v.commodity) + ", sum " + format_double(v.sum) + ")";
    }
    throw InfeasibleError(msg);
  }

  const int n = graph.vertex_count();
  const int m = graph.edge_count();
  const int k = static_cast<int>(demands.cols());

  Eigen::VectorXd conductance(m);
  for (int e = 0; e < m; ++e) {
    conductance[e] = 1.0 / (graph.edge(e).weight * graph.edge(e).weight);
  }
  Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(n, n);
  for (int e = 0; e < m; ++e) {
    const int u = graph.edge(e).tail;
    const int v = graph.edge(e).head;
    laplacian(u, u) += conductance[e];
    laplacian(v, v) += conductance[e];
    laplacian(u, v) -= conductance[e];
    laplacian(v, u) -= conductance[e];
  }

  // Ground the lowest-id vertex of each component to make the system
  // nonsingular; demands zero-sum per component, so the solution routes them.
  std::vector<char> grounded(n, 0);
  {
    std::vector<char> seen(graph.component_count(), 0);
    for (int v = 0; v < n; ++v) {
      const int c = graph.component_ids()[v];
      if (!seen[c]) {
        seen[c] = 1;
        grounded[v] = 1;
      }
    }
  }
  std::vector<int> keep;
  for (int v = 0; v < n; ++v) {
    if (!grounded[v]) keep.push_back(v);
  }
  const int r = static_cast<int>(keep.size());
  Eigen::MatrixXd reduced(r, r);
  for (int a = 0; a < r; ++a) {
    for (int b = 0; b < r; ++b) reduced(a, b) = laplacian(keep[a], keep[b]);
  }
  Eigen::LDLT<Eigen::MatrixXd> factor(reduced);

  FlowMatrix flow(m, k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd rhs(r);
    for (int a = 0; a < r; ++a) rhs[a] = demands(keep[a], j);
    Eigen::VectorXd reduced_potential = factor.solve(rhs);
    reduced_potential += factor.solve(rhs - reduced * reduced_potential);
    Eigen::VectorXd potential = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < r; ++a) potential[keep[a]] = reduced_potential[a];
    for (int e = 0; e < m; ++e) {
      flow(e, j) =
          conductance[e] * (potential[graph.edge(e).tail] - potential[graph.edge(e).head]);
    }
  }
  return flow;
}

/// Computable optimality bound E(F) - OPT <= lambda * (-R(X)) + lambda * err,
/// valid whenever X solves the residual problem at F to additive error err.
inline double gap_certificate(double residual_val, double lambda, double inner_err) {
  return std::max(0.0, lambda * (inner_err - residual_val));
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Minimizes E(F + alpha X) over alpha > 0. Doubling bracket then golden
// section; always returns a point no worse than alpha = 1, which is what the
// refinement analysis assumes.
inline double outer_step_size(const FlowMatrix& flow, const FlowMatrix& step,
                              const Graph& graph, const QPParams& params) {
  auto phi = [&](double alpha) { return objective(flow + alpha * step, graph, params); };
  double best_alpha = 1.0;
  double best_value = phi(1.0);
  double alpha = 2.0;
  double hi = 2.0;
  for (int i = 0; i < 60; ++i) {
    const double v = phi(alpha);
    hi = alpha;
    if (v >= best_value) break;
    best_alpha = alpha;
    best_value = v;
    alpha *= 2.0;
  }
  double lo = best_alpha == 1.0 ? 0.0 : best_alpha * 0.5;
  constexpr double kInvGolden = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvGolden * (b - a);
  double x2 = a + kInvGolden * (b - a);
  double f1 = phi(x1), f2 = phi(x2);
  for (int i = 0; i < 48; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvGolden * (b - a);
      f1 = phi(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvGolden * (b - a);
      f2 = phi(x2);
    }
  }
  const double refined = f1 <= f2 ? x1 : x2;
  const double refined_value = std::min(f1, f2);
  return refined_value < best_value ? refined : best_alpha;
}

}  // namespace detail

/// Iterative refinement (outer loop): start from the electrical flow, solve
/// the residual problem, apply the correction, and stop once either gap
/// certificate clears the eps threshold. Updates are circulations, so
/// feasibility never drifts beyond accumulation noise.
inline std::pair<FlowMatrix, SolveReport> solve(const ProblemInstance& instance,
                                                const QPParams& params,
                                                const DriverConfig& cfg) {
  params.validate();
  cfg.validate();
  if (instance.commodity_count() != params.k) {
    throw DimensionError("instance has " + std::to_string(instance.commodity_count()) +
                         " commodities, params say " + std::to_string(params.k));
  }
  const Graph& graph = instance.graph;
  const auto t_start = std::chrono::steady_clock::now();

  SolveReport report;
  report.params = {params.q,
                   params.p,
                   params.k,
                   cfg.eps,
                   cfg.subsolver.inner_tol,
                   cfg.max_outer_iters,
                   cfg.threads,
                   cfg.seed,
                   graph.vertex_count(),
                   graph.edge_count(),
                   lambda_value(params).value};

  const Lambda lambda = lambda_value(params);
  long cap = cfg.max_outer_iters;
  if (cap == 0) {
    const double derived =
        params.p * lambda.value *
        std::log(std::max(2.0, static_cast<double>(graph.edge_count()) / cfg.eps));
    cap = derived > 1e18 ? static_cast<long>(1e18) : static_cast<long>(std::ceil(derived));
  }
  report.params.max_outer_iters = cap;

  const CycleBasis basis = cycle_basis(graph);
  FlowMatrix flow = initial_flow(graph, instance.demands);
  report.timings.initializer_seconds = detail::seconds_since(t_start);

  double current_objective = objective(flow, graph, params);
  const double demand_scale = 1.0 + instance.demands.cwiseAbs().maxCoeff();
  int stall_streak = 0;

  for (long t = 0;; ++t) {
    const auto t_row = std::chrono::steady_clock::now();

    const auto t_sub = std::chrono::steady_clock::now();
    const ResidualModel model = build_residual(flow, graph, params);
    const ResidualSolve rs =
        solve_residual(graph, basis, model, cfg.subsolver, cfg.threads);
    report.timings.subsolve_seconds += detail::seconds_since(t_sub);
    report.subsolver_warnings = report.subsolver_warnings || rs.warning;

    const double threshold = cfg.stop_tol > 0.0
                                 ? cfg.stop_tol
                                 : (cfg.eps * current_objective + cfg.eps) / (1.0 + cfg.eps);
    double gap_bound = gap_certificate(rs.value, lambda.value, rs.err_bound);
    // A tighter direct certificate: minimizing the lower-bound surrogate over
    // circulations bounds OPT - E(F) from below. Only worth solving once the
    // residual value itself is below threshold (-R never exceeds the gap).
    if (gap_bound > threshold && -rs.value <= threshold) {
      const auto t_cert = std::chrono::steady_clock::now();
      const ResidualModel lower = build_lower_model(flow, graph, params);
      const ResidualSolve cert =
          solve_residual(graph, basis, lower, cfg.subsolver, cfg.threads);
      gap_bound = std::min(gap_bound, std::max(0.0, -cert.value + cert.err_bound));
      report.timings.certificate_seconds += detail::seconds_since(t_cert);
    }

    const double feasibility =
        (residues(graph, flow) - instance.demands).cwiseAbs().maxCoeff();
    report.objective_trace.push_back(current_objective);
    report.residual_trace.push_back(rs.value);
    report.gap_bounds.push_back(gap_bound);
    report.feasibility_residual.push_back(feasibility);

    if (feasibility > 1e-7 * demand_scale) {
      report.terminated = "feasibility-drift";
      report.iteration_seconds.push_back(detail::seconds_since(t_row));
      break;
    }
    if (gap_bound <= threshold) {
      report.terminated = "certified";
      report.iteration_seconds.push_back(detail::seconds_since(t_row));
      break;
    }
    if (t >= cap) {
      report.terminated = "iteration-cap";
      report.iteration_seconds.push_back(detail::seconds_since(t_row));
      break;
    }
    if (stall_streak >= 50) {
      report.terminated = "stalled";
      report.iteration_seconds.push_back(detail::seconds_since(t_row));
      break;
    }

    const auto t_ls = std::chrono::steady_clock::now();
    const double alpha = detail::outer_step_size(flow, rs.step, graph, params);
    flow += alpha * rs.step;
    const double next_objective = objective(flow, graph, params);
    report.timings.line_search_seconds += detail::seconds_since(t_ls);

    if (current_objective - next_objective <= 1e-15 * (1.0 + std::abs(current_objective))) {
      ++stall_streak;
    } else {
      stall_streak = 0;
    }
    current_objective = next_objective;
    report.iteration_seconds.push_back(detail::seconds_since(t_row));
  }

  report.iterations = static_cast<long>(report.objective_trace.size()) - 1;
  report.timings.total_seconds = detail::seconds_since(t_start);
  return {std::move(flow), std::move(report)};
}

}  // namespace qpflow

#endif  // QPFLOW_DRIVER_HPP
