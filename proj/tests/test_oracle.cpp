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

#include "qpflow/oracle.hpp"
#include "test_util.hpp"

using namespace qpflow;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("oracle solves the canonical pairs", "[oracle]") {
  SECTION("symmetric pair") {
    Graph g(2, {{0, 1, 1.0}, {0, 1, 1.0}});
    DemandMatrix d(2, 1);
    d << 1.0, -1.0;
    const OracleResult res = oracle_solve({std::move(g), std::move(d)}, QPParams{2.0, 2.0, 1});
    CHECK_THAT(res.objective, WithinAbs(0.125, 1e-10));
  }
  SECTION("weighted pair matches golden section") {
    Graph g(2, {{0, 1, 1.0}, {0, 1, 2.0}});
    DemandMatrix d(2, 1);
    d << 1.0, -1.0;
    const OracleResult res = oracle_solve({std::move(g), std::move(d)}, QPParams{2.0, 2.0, 1});
    const auto [t, opt] = golden_section(
        [](double x) { return std::pow(x, 4.0) + 16.0 * std::pow(1.0 - x, 4.0); }, 0.0, 1.0,
        300);
    CHECK_THAT(res.objective, WithinRel(opt, 1e-9));
  }
  SECTION("tree instance has no freedom") {
    Graph g(3, {{0, 1, 1.0}, {1, 2, 2.0}});
    DemandMatrix d(3, 1);
    d << 1.0, 0.0, -1.0;
    const QPParams params{1.5, 2.0, 1};
    Graph copy = g;
    const OracleResult res = oracle_solve({std::move(g), d}, params);
    FlowMatrix unique(2, 1);
    unique << 1.0, 1.0;
    CHECK_THAT(res.objective, WithinRel(objective(unique, copy, params), 1e-12));
  }
}

TEST_CASE("oracle enforces the size cap", "[oracle]") {
  std::vector<Edge> edges;
  for (int i = 0; i < 201; ++i) edges.push_back({0, 1, 1.0});
  Graph g(2, std::move(edges));
  DemandMatrix d = DemandMatrix::Zero(2, 1);
  d(0, 0) = 1.0;
  d(1, 0) = -1.0;
  CHECK_THROWS_AS(oracle_solve({std::move(g), std::move(d)}, QPParams{2.0, 2.0, 1}),
                  DomainError);
}

TEST_CASE("finite differences on simple fields", "[oracle]") {
  const Eigen::VectorXd at = Eigen::VectorXd::Constant(1, 3.0);
  const Eigen::VectorXd g =
      finite_diff([](const Eigen::VectorXd& v) { return v[0] * v[0]; }, at);
  CHECK_THAT(g[0], WithinAbs(6.0, 1e-8));
}

TEST_CASE("golden section finds scalar minima", "[oracle]") {
  const auto [x, f] = golden_section(
      [](double t) { return (t - 0.7) * (t - 0.7) + 1.5; }, -10.0, 10.0, 200);
  CHECK_THAT(x, WithinAbs(0.7, 1e-7));
  CHECK_THAT(f, WithinAbs(1.5, 1e-12));
}

TEST_CASE("slack rule", "[oracle]") {
  CHECK(slack_ok(1.0, 1.0));
  CHECK(slack_ok(0.0, 0.0));
  CHECK(slack_ok(1.0 + 1e-10, 1.0));
  CHECK_FALSE(slack_ok(1.0 + 1e-6, 1.0));
  CHECK(slack_ok(-5.0, -5.0));  // negative right-hand sides absorb noise too
  CHECK_FALSE(slack_ok(-4.9, -5.0));
}

TEST_CASE("lemma validation passes on a reduced grid", "[oracle]") {
  LemmaGrid grid;
  grid.qs = {1.1, 2.0};
  grid.ps = {2.0, 3.0};
  grid.ks = {1, 4};
  const LemmaValidationReport report = validate_lemmas(grid, 2000, 12345, 2);
  INFO(report.to_text());
  CHECK(report.all_passed());
  CHECK(report.checks.size() == 2 * 2 * 2 * 15);
  for (const auto& c : report.checks) {
    if (!c.skipped) {
      REQUIRE(c.samples == 2000);
      REQUIRE(c.worst_margin <= 0.0);
    }
  }
}

TEST_CASE("lemma validation is deterministic and thread independent", "[oracle]") {
  LemmaGrid grid;
  grid.qs = {1.5};
  grid.ps = {2.0};
  grid.ks = {2};
  const LemmaValidationReport a = validate_lemmas(grid, 3000, 99, 1);
  const LemmaValidationReport b = validate_lemmas(grid, 3000, 99, 2);
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    CHECK(a.checks[i].failures == b.checks[i].failures);
    CHECK(a.checks[i].worst_margin == b.checks[i].worst_margin);
  }
}

TEST_CASE("extreme q stresses lambda without overflow on the standard grid", "[oracle]") {
  const Lambda l = lambda_value(QPParams{1.1, 4.0, 8});
  CHECK(std::isfinite(l.value));
  CHECK(l.value > 1e46);

  // below the supported grid lambda overflows; the validator marks it skipped
  LemmaGrid grid;
  grid.qs = {1.001};
  grid.ps = {2.0};
  grid.ks = {1};
  const LemmaValidationReport report = validate_lemmas(grid, 100, 7, 1);
  bool found_skip = false;
  for (const auto& c : report.checks) {
    if (c.lemma == "3.4-(9)") {
      CHECK(c.skipped);
      found_skip = true;
    } else if (!c.skipped) {
      CHECK(c.failures == 0);
    }
  }
  CHECK(found_skip);
}
