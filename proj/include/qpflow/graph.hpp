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

#ifndef QPFLOW_GRAPH_HPP
#define QPFLOW_GRAPH_HPP

#include <algorithm>
#include <deque>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qpflow/common.hpp"

namespace qpflow {

// Sign convention used everywhere: the incidence matrix B (edges x vertices)
// has B[e][tail] = +1 and B[e][head] = -1, and a flow f routes demand d when
// B^T f = d. A positive flow value on edge (u, v) therefore moves mass from
// u to v, and a positive demand entry marks a vertex that supplies mass.

using DemandMatrix = Eigen::MatrixXd;  // vertices x commodities
using FlowMatrix = Eigen::MatrixXd;    // edges x commodities

struct Edge {
  int tail = 0;
  int head = 0;
  double weight = 1.0;
};

/// Undirected multigraph with positive edge weights. Edge orientation only
/// signs flow values. Immutable after construction; parallel edges allowed,
/// self-loops rejected.
class Graph {
 public:
  Graph(int vertex_count, std::vector<Edge> edges)
      : n_(vertex_count), edges_(std::move(edges)) {
    if (n_ < 2) throw DomainError("graph needs at least 2 vertices");
    if (edges_.empty()) throw DomainError("graph needs at least 1 edge");
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const Edge& ed = edges_[e];
      if (ed.tail < 0 || ed.tail >= n_ || ed.head < 0 || ed.head >= n_) {
        throw DomainError("edge " + std::to_string(e) + " endpoint out of range");
      }
      if (ed.tail == ed.head) {
        throw DomainError("edge " + std::to_string(e) + " is a self-loop");
      }
      if (!(ed.weight > 0.0) || !std::isfinite(ed.weight)) {
        throw DomainError("edge " + std::to_string(e) + " weight must be positive");
      }
    }
    compute_components();
  }

  int vertex_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }

  Eigen::VectorXd weights() const {
    Eigen::VectorXd w(edge_count());
    for (int e = 0; e < edge_count(); ++e) w[e] = edges_[e].weight;
    return w;
  }

  int component_count() const { return component_count_; }
  /// Component id per vertex, in [0, component_count).
  const std::vector<int>& component_ids() const { return component_; }

  /// Adjacency as (edge index, neighbor), in edge-insertion order.
  const std::vector<std::vector<std::pair<int, int>>>& adjacency() const {
    return adjacency_;
  }

 private:
  void compute_components() {
    adjacency_.assign(n_, {});
    for (int e = 0; e < edge_count(); ++e) {
      adjacency_[edges_[e].tail].emplace_back(e, edges_[e].head);
      adjacency_[edges_[e].head].emplace_back(e, edges_[e].tail);
    }
    component_.assign(n_, -1);
    component_count_ = 0;
    for (int root = 0; root < n_; ++root) {
      if (component_[root] >= 0) continue;
      const int id = component_count_++;
      std::deque<int> queue{root};
      component_[root] = id;
      while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (const auto& [e, u] : adjacency_[v]) {
          if (component_[u] < 0) {
            component_[u] = id;
            queue.push_back(u);
          }
        }
      }
    }
  }

  int n_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<int, int>>> adjacency_;
  std::vector<int> component_;
  int component_count_ = 0;
};

/// B^T x: net outflow per (vertex, commodity). A flow x routes demands D
/// exactly when residues(graph, x) == D.
inline Eigen::MatrixXd residues(const Graph& graph, const Eigen::MatrixXd& flow) {
  if (flow.rows() != graph.edge_count()) {
    throw DimensionError("flow has " + std::to_string(flow.rows()) + " rows, graph has " +
                         std::to_string(graph.edge_count()) + " edges");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(graph.vertex_count(), flow.cols());
  for (int e = 0; e < graph.edge_count(); ++e) {
    out.row(graph.edge(e).tail) += flow.row(e);
    out.row(graph.edge(e).head) -= flow.row(e);
  }
  return out;
}

/// Signed sparse edge vector with B^T c = 0 exactly; entries are (edge, ±1)
/// sorted by edge index.
struct Cycle {
  std::vector<std::pair<int, int>> entries;
};

struct CycleBasis {
  std::vector<Cycle> cycles;

  /// For each edge, the (cycle index, sign) pairs touching it.
  std::vector<std::vector<std::pair<int, int>>> edge_incidence(int edge_count) const {
    std::vector<std::vector<std::pair<int, int>>> inc(edge_count);
    for (std::size_t c = 0; c < cycles.size(); ++c) {
      for (const auto& [e, s] : cycles[c].entries) {
        inc[e].emplace_back(static_cast<int>(c), s);
      }
    }
    return inc;
  }

  /// Dense edges x cycles matrix; columns span the circulation space.
  Eigen::MatrixXd to_matrix(int edge_count) const {
    Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(edge_count, static_cast<int>(cycles.size()));
    for (std::size_t c = 0; c < cycles.size(); ++c) {
      for (const auto& [e, s] : cycles[c].entries) {
        mat(e, static_cast<int>(c)) = static_cast<double>(s);
      }
    }
    return mat;
  }
};

/// Fundamental cycle basis from a BFS spanning forest rooted at the lowest
/// vertex id of each component. Each non-tree edge closes exactly one cycle,
/// carrying sign +1 in it; basis size is m - n + #components.
inline CycleBasis cycle_basis(const Graph& graph) {
  const int n = graph.vertex_count();
  const int m = graph.edge_count();
  std::vector<int> parent_edge(n, -1);
  std::vector<int> depth(n, -1);
  std::vector<char> is_tree_edge(m, 0);

  for (int root = 0; root < n; ++root) {
    if (depth[root] >= 0) continue;
    depth[root] = 0;
    std::deque<int> queue{root};
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (const auto& [e, u] : graph.adjacency()[v]) {
        if (depth[u] < 0) {
          depth[u] = depth[v] + 1;
          parent_edge[u] = e;
          is_tree_edge[e] = 1;
          queue.push_back(u);
        }
      }
    }
  }

  // Walks one step towards the root; returns (next vertex, sign of the tree
  // edge when traversed in the walking direction).
  auto step_up = [&](int v) {
    const Edge& ed = graph.edge(parent_edge[v]);
    const int up = ed.tail == v ? ed.head : ed.tail;
    const int sign = ed.tail == v ? +1 : -1;  // traversing tail->head is +1
    return std::make_pair(up, sign);
  };

  CycleBasis basis;
  for (int e = 0; e < m; ++e) {
    if (is_tree_edge[e]) continue;
    // The cycle traverses e from tail to head, then returns head -> tail
    // along the forest.
    Cycle cycle;
    cycle.entries.emplace_back(e, +1);
    int a = graph.edge(e).head;
    int b = graph.edge(e).tail;
    while (a != b) {
      if (depth[a] >= depth[b]) {
        const auto [up, sign] = step_up(a);
        cycle.entries.emplace_back(parent_edge[a], sign);
        a = up;
      } else {
        const auto [up, sign] = step_up(b);
        cycle.entries.emplace_back(parent_edge[b], -sign);
        b = up;
      }
    }
    std::sort(cycle.entries.begin(), cycle.entries.end());
    basis.cycles.push_back(std::move(cycle));
  }
  return basis;
}

struct DemandViolation {
  int component = -1;  // -1 marks a whole-column (global) violation
  int commodity = 0;
  double sum = 0.0;
};

struct ValidationReport {
  bool ok = true;
  std::vector<DemandViolation> violations;
};

/// Checks that every demand column sums to zero, globally and within each
/// connected component (tolerance 1e-12 * max |d|).
inline ValidationReport validate_instance(const Graph& graph, const DemandMatrix& demands) {
  if (demands.rows() != graph.vertex_count()) {
    throw DimensionError("demand matrix has " + std::to_string(demands.rows()) +
                         " rows, graph has " + std::to_string(graph.vertex_count()) +
                         " vertices");
  }
  const double tol = 1e-12 * demands.cwiseAbs().maxCoeff();
  ValidationReport report;
  const int k = static_cast<int>(demands.cols());
  const int num_components = graph.component_count();
  for (int j = 0; j < k; ++j) {
    std::vector<KahanSum> per_component(num_components);
    for (int v = 0; v < graph.vertex_count(); ++v) {
      per_component[graph.component_ids()[v]].add(demands(v, j));
    }
    KahanSum total;
    for (int c = 0; c < num_components; ++c) {
      const double s = per_component[c].value();
      total.add(s);
      if (std::abs(s) > tol) {
        report.violations.push_back({c, j, s});
      }
    }
    if (std::abs(total.value()) > tol) {
      report.violations.push_back({-1, j, total.value()});
    }
  }
  report.ok = report.violations.empty();
  return report;
}

struct ProblemInstance {
  Graph graph;
  DemandMatrix demands;

  int commodity_count() const { return static_cast<int>(demands.cols()); }
};

}  // namespace qpflow

#endif  // QPFLOW_GRAPH_HPP
