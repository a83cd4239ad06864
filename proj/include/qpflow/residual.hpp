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

#ifndef QPFLOW_RESIDUAL_HPP
#define QPFLOW_RESIDUAL_HPP

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "qpflow/common.hpp"
#include "qpflow/graph.hpp"
#include "qpflow/objective.hpp"

namespace qpflow {

// Decomposable surrogate around an anchor flow F. Each (edge, commodity)
// coordinate carries the scalar convex cost
//
//   c_ej(x) = A_ej x + B_e gamma_q(scale * x, f_ej) + C_e |x|^{pq}
//
// with f_ej = |F_ej|. Two instantiations share this shape: the residual
// problem (scale = 6kp, coefficients 7/k and 3(6pk)^{pq}/k) whose value upper
// bounds E(F+X) - E(F), and the companion lower-bound surrogate (scale = 1,
// coefficients p(q-1)/16 and ((q-1)/(pq-1)) 2^{-(pq+2)}) used to certify
// optimality gaps.
struct ResidualModel {
  QPParams params;
  double scale = 1.0;
  Eigen::MatrixXd linear;      // A, edges x commodities (the gradient of E)
  Eigen::VectorXd gamma_coef;  // B, per edge (constant across commodities)
  Eigen::VectorXd power_coef;  // C, per edge (constant across commodities)
  Eigen::MatrixXd anchor;      // |F|, edges x commodities

  int edge_count() const { return static_cast<int>(anchor.rows()); }
  int commodity_count() const { return static_cast<int>(anchor.cols()); }
};

namespace detail {

inline ResidualModel build_model(const FlowMatrix& flow, const Graph& graph,
                                 const QPParams& params, double scale,
                                 double gamma_factor, double power_factor) {
  params.validate();
  if (flow.rows() != graph.edge_count()) throw DimensionError("model: flow rows != edges");
  if (flow.cols() != params.k) throw DimensionError("model: flow cols != k");
  const int m = graph.edge_count();
  ResidualModel model;
  model.params = params;
  model.scale = scale;
  model.linear.resize(m, params.k);
  model.gamma_coef.resize(m);
  model.power_coef.resize(m);
  model.anchor = flow.cwiseAbs();
  for (int e = 0; e < m; ++e) {
    const double pw = pow_abs(graph.edge(e).weight, params.pq());
    const double s = lq_power(flow.row(e).transpose(), params.q);
    model.linear.row(e) = pw * edge_gradient(flow.row(e).transpose(), params).transpose();
    model.gamma_coef[e] = pw * gamma_factor * pow_abs(s, params.p - 1.0);
    model.power_coef[e] = pw * power_factor;
  }
  return model;
}

}  // namespace detail

/// Residual problem w.r.t. the anchor flow:  R(X; F) >= E(F+X) - E(F) for
/// every X, with equality direction recovered after shrinking by lambda.
inline ResidualModel build_residual(const FlowMatrix& flow, const Graph& graph,
                                    const QPParams& params) {
  const double k = static_cast<double>(params.k);
  const double power_factor = 3.0 * pow_abs(6.0 * params.p * k, params.pq()) / k;
  return detail::build_model(flow, graph, params, 6.0 * k * params.p, 7.0 / k, power_factor);
}

/// Lower-bound surrogate: minimizing <A, X> + sum B gamma_q(X) + sum C |X|^{pq}
/// over circulations lower bounds OPT - E(F), which certifies the gap.
inline ResidualModel build_lower_model(const FlowMatrix& flow, const Graph& graph,
                                       const QPParams& params) {
  const double q = params.q;
  const double gamma_factor = params.p * (q - 1.0) / 16.0;
  const double power_factor =
      (q - 1.0) / (params.pq() - 1.0) * std::exp2(-(params.pq() + 2.0));
  return detail::build_model(flow, graph, params, 1.0, gamma_factor, power_factor);
}

inline double cost_value(const ResidualModel& model, int e, int j, double x) {
  if (x == 0.0) return 0.0;
  return model.linear(e, j) * x +
         model.gamma_coef[e] * gamma(model.scale * x, model.anchor(e, j), model.params.q) +
         model.power_coef[e] * pow_abs(x, model.params.pq());
}

/// R(X; F) = sum over (e, j) of c_ej(X_ej).
inline double residual_value(const ResidualModel& model, const FlowMatrix& x) {
  if (x.rows() != model.anchor.rows() || x.cols() != model.anchor.cols()) {
    throw DimensionError("residual_value: dimension mismatch");
  }
  KahanSum sum;
  for (int e = 0; e < model.edge_count(); ++e) {
    for (int j = 0; j < model.commodity_count(); ++j) {
      sum.add(cost_value(model, e, j, x(e, j)));
    }
  }
  return sum.value();
}

struct CostDerivatives {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

/// Value, first and second derivative of c_ej at x. The quadratic branch is
/// used at the branch point |scale*x| = f (left-continuous c''); c'' can be
/// +inf at x = 0 on zero-anchor coordinates with q < 2.
inline CostDerivatives cost_derivatives(const ResidualModel& model, int e, int j, double x) {
  const double A = model.linear(e, j);
  const double B = model.gamma_coef[e];
  const double C = model.power_coef[e];
  const double f = model.anchor(e, j);
  const double s = model.scale;
  const double q = model.params.q;
  const double pq = model.params.pq();

  CostDerivatives d;
  const double power = C * pow_abs(x, pq);
  const double dpower = C * pq * signed_pow(x, pq - 1.0);
  const double ddpower = C * pq * (pq - 1.0) * pow_abs(x, pq - 2.0);
  if (f > 0.0 && std::abs(s * x) <= f) {
    const double quad = B * q * pow_abs(f, q - 2.0) * s * s;
    d.value = A * x + 0.5 * quad * x * x + power;
    d.first = A + quad * x + dpower;
    d.second = quad + ddpower;
  } else {
    const double sq = pow_abs(s, q);
    d.value = A * x + B * (sq * pow_abs(x, q) - (1.0 - 0.5 * q) * pow_abs(f, q)) + power;
    d.first = A + B * sq * q * signed_pow(x, q - 1.0) + dpower;
    d.second = B * sq * q * (q - 1.0) * pow_abs(x, q - 2.0) + ddpower;
  }
  return d;
}

/// Third derivative of c_ej away from x = 0 and the branch point.
inline double cost_third_derivative(const ResidualModel& model, int e, int j, double x) {
  const double B = model.gamma_coef[e];
  const double C = model.power_coef[e];
  const double f = model.anchor(e, j);
  const double s = model.scale;
  const double q = model.params.q;
  const double pq = model.params.pq();
  const double power = C * pq * (pq - 1.0) * (pq - 2.0) * signed_pow(x, pq - 3.0);
  if (f > 0.0 && std::abs(s * x) <= f) return power;
  return B * pow_abs(s, q) * q * (q - 1.0) * (q - 2.0) * signed_pow(x, q - 3.0) + power;
}

/// Epigraph barrier condition |c'''(x)| <= 3 beta |c''(x) / x| with
/// beta = max{2 - q, pq - 2} / 3; this is what makes -ln(y - c(x)) a
/// self-concordant barrier for the epigraph of c.
inline bool self_concordance_check(const ResidualModel& model, int e, int j, double x) {
  const double q = model.params.q;
  const double pq = model.params.pq();
  const double beta = std::max(2.0 - q, pq - 2.0) / 3.0;
  const double third = std::abs(cost_third_derivative(model, e, j, x));
  if (beta == 0.0) return third <= 1e-12;
  const double bound = 3.0 * beta * std::abs(cost_derivatives(model, e, j, x).second / x);
  return third <= bound * (1.0 + 1e-9) + 1e-12;
}

/// Step shrink factor: E(F + lambda X) - E(F) >= lambda R(X; F). The two
/// bounds are the explicit sufficient conditions behind the refinement step;
/// their max always dominates 6kp.
struct Lambda {
  double value = 0.0;
  double bound1 = 0.0;
  double bound2 = 0.0;
};

inline Lambda lambda_value(const QPParams& params) {
  params.validate();
  const double q = params.q;
  const double p = params.p;
  const double k = static_cast<double>(params.k);
  const double pq = params.pq();
  Lambda lambda;
  lambda.bound1 = k * p * std::pow(4032.0 / (q - 1.0), 1.0 / (q - 1.0));
  lambda.bound2 = 1728.0 * k * std::pow((pq - 1.0) / (q - 1.0), 1.0 / (pq - 1.0)) *
                  std::pow(p, pq / (pq - 1.0));
  lambda.value = std::max(lambda.bound1, lambda.bound2);
  return lambda;
}

}  // namespace qpflow

#endif  // QPFLOW_RESIDUAL_HPP
