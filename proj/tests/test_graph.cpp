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

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qpflow/graph.hpp"
#include "test_util.hpp"

using namespace qpflow;

namespace {

Graph single_edge() { return Graph(2, {{0, 1, 1.0}}); }

Graph triangle() { return Graph(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}}); }

Graph parallel_pair() { return Graph(2, {{0, 1, 1.0}, {0, 1, 1.0}}); }

// Integer residue of a basis cycle; must vanish identically.
std::vector<long> integer_residue(const Graph& g, const Cycle& cycle) {
  std::vector<long> r(g.vertex_count(), 0);
  for (const auto& [e, s] : cycle.entries) {
    r[g.edge(e).tail] += s;
    r[g.edge(e).head] -= s;
  }
  return r;
}

}  // namespace

TEST_CASE("graph construction validates input", "[graph]") {
  CHECK_THROWS_AS(Graph(1, {{0, 0, 1.0}}), DomainError);
  CHECK_THROWS_AS(Graph(3, {}), DomainError);
  CHECK_THROWS_AS(Graph(2, {{0, 2, 1.0}}), DomainError);
  CHECK_THROWS_AS(Graph(2, {{1, 1, 1.0}}), DomainError);   // self-loop
  CHECK_THROWS_AS(Graph(2, {{0, 1, 0.0}}), DomainError);   // zero weight
  CHECK_THROWS_AS(Graph(2, {{0, 1, -2.0}}), DomainError);  // negative weight
  CHECK_NOTHROW(Graph(2, {{0, 1, 1.0}, {1, 0, 2.0}}));     // parallel, reversed
}

TEST_CASE("components are found", "[graph]") {
  const Graph g(5, {{0, 1, 1.0}, {3, 4, 1.0}, {1, 2, 1.0}});
  CHECK(g.component_count() == 2);
  CHECK(g.component_ids()[0] == g.component_ids()[2]);
  CHECK(g.component_ids()[3] == g.component_ids()[4]);
  CHECK(g.component_ids()[0] != g.component_ids()[3]);
}

TEST_CASE("residues of a single edge", "[graph]") {
  const Graph g = single_edge();
  Eigen::MatrixXd x(1, 1);
  x << 1.0;
  const Eigen::MatrixXd r = residues(g, x);
  CHECK(r(0, 0) == 1.0);
  CHECK(r(1, 0) == -1.0);
}

TEST_CASE("residues of zero flow and of a circulation vanish", "[graph]") {
  const Graph g = triangle();
  CHECK(residues(g, Eigen::MatrixXd::Zero(3, 2)).isZero(0.0));
  Eigen::MatrixXd cycle(3, 1);
  cycle << 1.0, 1.0, 1.0;  // consistent orientation around the triangle
  CHECK(residues(g, cycle).isZero(0.0));
}

TEST_CASE("residues checks dimensions", "[graph]") {
  CHECK_THROWS_AS(residues(single_edge(), Eigen::MatrixXd::Zero(2, 1)), DimensionError);
}

TEST_CASE("residues is linear", "[graph]") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const ProblemInstance inst = test::random_instance(rng());
    const int m = inst.graph.edge_count();
    const int k = inst.commodity_count();
    const FlowMatrix x = test::random_flow(rng(), m, k);
    const FlowMatrix y = test::random_flow(rng(), m, k);
    const double a = -1.75, b = 0.35;
    const Eigen::MatrixXd lhs = residues(inst.graph, a * x + b * y);
    const Eigen::MatrixXd rhs = a * residues(inst.graph, x) + b * residues(inst.graph, y);
    const double scale = lhs.cwiseAbs().maxCoeff() + rhs.cwiseAbs().maxCoeff();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + scale));
  }
}

TEST_CASE("cycle basis on canonical graphs", "[graph]") {
  SECTION("parallel pair has one cycle") {
    const Graph g = parallel_pair();
    const CycleBasis basis = cycle_basis(g);
    REQUIRE(basis.cycles.size() == 1);
    const auto& entries = basis.cycles[0].entries;
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].second == -entries[1].second);
    for (long r : integer_residue(g, basis.cycles[0])) CHECK(r == 0);
  }
  SECTION("tree has no cycles") {
    const Graph g(4, {{0, 1, 1.0}, {1, 2, 1.0}, {1, 3, 1.0}});
    CHECK(cycle_basis(g).cycles.empty());
  }
  SECTION("triangle cycle touches all edges with residue zero") {
    const Graph g = triangle();
    const CycleBasis basis = cycle_basis(g);
    REQUIRE(basis.cycles.size() == 1);
    CHECK(basis.cycles[0].entries.size() == 3);
    for (long r : integer_residue(g, basis.cycles[0])) CHECK(r == 0);
  }
}

TEST_CASE("cycle basis cardinality and exact residues on random multigraphs", "[graph]") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const ProblemInstance inst = test::random_instance(rng(), {.min_n = 4, .max_n = 12, .max_m = 40});
    const Graph& g = inst.graph;
    const CycleBasis basis = cycle_basis(g);
    REQUIRE(static_cast<int>(basis.cycles.size()) ==
            g.edge_count() - g.vertex_count() + g.component_count());
    for (const Cycle& cycle : basis.cycles) {
      for (long r : integer_residue(g, cycle)) REQUIRE(r == 0);
    }
  }
}

TEST_CASE("cycle basis is deterministic", "[graph]") {
  const ProblemInstance inst = test::random_instance(99);
  const CycleBasis a = cycle_basis(inst.graph);
  const CycleBasis b = cycle_basis(inst.graph);
  REQUIRE(a.cycles.size() == b.cycles.size());
  for (std::size_t i = 0; i < a.cycles.size(); ++i) {
    CHECK(a.cycles[i].entries == b.cycles[i].entries);
  }
}

TEST_CASE("validate_instance accepts balanced demands", "[graph]") {
  Eigen::MatrixXd d(2, 1);
  d << 1.0, -1.0;
  CHECK(validate_instance(single_edge(), d).ok);
}

TEST_CASE("validate_instance rejects unbalanced columns", "[graph]") {
  Eigen::MatrixXd d(2, 1);
  d << 1.0, 0.0;
  const ValidationReport report = validate_instance(single_edge(), d);
  REQUIRE_FALSE(report.ok);
  CHECK(report.violations.front().commodity == 0);
}

TEST_CASE("validate_instance reports cross-component demand", "[graph]") {
  const Graph g(4, {{0, 1, 1.0}, {2, 3, 1.0}});
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(4, 2);
  d(0, 0) = 1.0;
  d(2, 0) = -1.0;  // crosses components: zero-sums globally but not per part
  d(0, 1) = 1.0;
  d(1, 1) = -1.0;  // fine
  const ValidationReport report = validate_instance(g, d);
  REQUIRE_FALSE(report.ok);
  REQUIRE(report.violations.size() == 2);
  for (const auto& v : report.violations) {
    CHECK(v.commodity == 0);
    CHECK(v.component >= 0);
  }
}
