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

#ifndef QPFLOW_OBJECTIVE_HPP
#define QPFLOW_OBJECTIVE_HPP

#include <cmath>

#include <Eigen/Dense>

#include "qpflow/common.hpp"
#include "qpflow/graph.hpp"

namespace qpflow {

/// Exponent pair of the composite objective sum_e w_e^{pq} (sum_j |F_ej|^q)^p,
/// with q in (1, 2] and finite p >= 2.
struct QPParams {
  double q = 2.0;
  double p = 2.0;
  int k = 1;

  double pq() const { return p * q; }

  void validate() const {
    if (!(q > 1.0) || !(q <= 2.0) || !std::isfinite(q)) {
      throw DomainError("q must lie in (1, 2]");
    }
    if (!(p >= 2.0) || !std::isfinite(p)) {
      throw DomainError("p must be finite and >= 2");
    }
    if (k < 1) throw DomainError("commodity count must be >= 1");
  }
};

/// gamma_q(x, f): (q/2) f^{q-2} x^2 for |x| <= f, |x|^q - (1 - q/2) f^q
/// beyond; the two branches agree at |x| = f. The zero anchor f = 0 takes
/// the continuous extension |x|^q.
inline double gamma(double x, double f, double q) {
  if (!(q > 1.0) || !(q <= 2.0)) throw DomainError("gamma: q must lie in (1, 2]");
  if (!(f >= 0.0)) throw DomainError("gamma: anchor must be nonnegative");
  if (x == 0.0) return 0.0;
  const double ax = std::abs(x);
  if (f == 0.0) return pow_abs(x, q);
  if (ax <= f) return 0.5 * q * pow_abs(f, q - 2.0) * x * x;
  return pow_abs(x, q) - (1.0 - 0.5 * q) * pow_abs(f, q);
}

/// Coordinatewise sum of gamma over a vector pair.
inline double gamma_vec(const Eigen::VectorXd& x, const Eigen::VectorXd& f, double q) {
  if (x.size() != f.size()) throw DimensionError("gamma_vec: length mismatch");
  KahanSum sum;
  for (Eigen::Index j = 0; j < x.size(); ++j) sum.add(gamma(x[j], f[j], q));
  return sum.value();
}

/// sum_j |x_j|^q, the q-th power of the lq norm.
inline double lq_power(const Eigen::VectorXd& x, double q) {
  KahanSum sum;
  for (Eigen::Index j = 0; j < x.size(); ++j) sum.add(pow_abs(x[j], q));
  return sum.value();
}

/// E(F) = sum_e w_e^{pq} (sum_j |F_ej|^q)^p.
inline double objective(const FlowMatrix& flow, const Graph& graph, const QPParams& params) {
  params.validate();
  if (flow.rows() != graph.edge_count()) throw DimensionError("objective: flow rows != edges");
  KahanSum total;
  for (int e = 0; e < graph.edge_count(); ++e) {
    const double s = lq_power(flow.row(e).transpose(), params.q);
    total.add(pow_abs(graph.edge(e).weight, params.pq()) * pow_abs(s, params.p));
  }
  return total.value();
}

/// Gradient of ell(x) = ||x||_q^{pq}:  pq ||x||_q^{q(p-1)} |x|^{q-2} x,
/// with the |0|^{q-2}*0 entries taken as 0.
inline Eigen::VectorXd edge_gradient(const Eigen::VectorXd& x, const QPParams& params) {
  const double s = lq_power(x, params.q);
  const double outer = params.pq() * pow_abs(s, params.p - 1.0);
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    g[j] = outer * signed_pow(x[j], params.q - 1.0);
  }
  return g;
}

/// Entrywise gradient of E: (e, j) -> w_e^{pq} pq ||F_e||_q^{q(p-1)} |F_ej|^{q-2} F_ej.
inline Eigen::MatrixXd gradient(const FlowMatrix& flow, const Graph& graph,
                                const QPParams& params) {
  params.validate();
  if (flow.rows() != graph.edge_count()) throw DimensionError("gradient: flow rows != edges");
  Eigen::MatrixXd g(flow.rows(), flow.cols());
  for (int e = 0; e < graph.edge_count(); ++e) {
    g.row(e) = pow_abs(graph.edge(e).weight, params.pq()) *
               edge_gradient(flow.row(e).transpose(), params).transpose();
  }
  return g;
}

/// Hessian of ell(x) = ||x||_q^{pq}:
///   pq(q-1)||x||^{(p-1)q} diag(|x|^{q-2})
///   + p(p-1)q^2 ||x||^{(p-2)q} (|x|^{q-2} x)(|x|^{q-2} x)^T.
/// Singular at zero coordinates when q < 2; those are rejected.
inline Eigen::MatrixXd edge_hessian(const Eigen::VectorXd& x, const QPParams& params) {
  params.validate();
  const double q = params.q;
  const double p = params.p;
  if (q < 2.0) {
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (x[j] == 0.0) throw DomainError("edge_hessian: zero coordinate with q < 2");
    }
  }
  const double s = lq_power(x, q);
  Eigen::VectorXd kernel(x.size());  // |x|^{q-2} x
  Eigen::VectorXd diag(x.size());    // |x|^{q-2}
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    diag[j] = pow_abs(x[j], q - 2.0);
    kernel[j] = signed_pow(x[j], q - 1.0);
  }
  Eigen::MatrixXd h = (p * q * (q - 1.0) * pow_abs(s, p - 1.0)) * diag.asDiagonal();
  if (p > 2.0 || s > 0.0) {
    h += (p * (p - 1.0) * q * q * pow_abs(s, p - 2.0)) * kernel * kernel.transpose();
  }
  return h;
}

/// Bregman divergence of ell at f in direction x:
/// ||f+x||_q^{pq} - ||f||_q^{pq} - <grad ell(f), x>. Nonnegative by convexity.
inline double bregman(const Eigen::VectorXd& f, const Eigen::VectorXd& x,
                      const QPParams& params) {
  params.validate();
  if (f.size() != x.size()) throw DimensionError("bregman: length mismatch");
  const double lhs = pow_abs(lq_power(f + x, params.q), params.p);
  const double base = pow_abs(lq_power(f, params.q), params.p);
  return lhs - base - edge_gradient(f, params).dot(x);
}

}  // namespace qpflow

#endif  // QPFLOW_OBJECTIVE_HPP
