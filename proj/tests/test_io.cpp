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

#include <sstream>

#include <json.hpp>

#include "qpflow/io.hpp"
#include "test_util.hpp"

using namespace qpflow;
using Catch::Matchers::ContainsSubstring;

namespace {

ProblemInstance parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_instance_stream(in, "<memory>");
}

}  // namespace

TEST_CASE("parse minimal instance", "[io]") {
  const ProblemInstance inst = parse_text(
      "# tiny\n"
      "p qpflow 2 1 1\n"
      "e 1 2 1.0\n"
      "d 1 1 1.0\n"
      "d 2 1 -1.0\n");
  CHECK(inst.graph.vertex_count() == 2);
  CHECK(inst.graph.edge_count() == 1);
  CHECK(inst.commodity_count() == 1);
  CHECK(inst.graph.edge(0).tail == 0);
  CHECK(inst.graph.edge(0).head == 1);
  CHECK(inst.demands(0, 0) == 1.0);
  CHECK(inst.demands(1, 0) == -1.0);
}

TEST_CASE("missing demand entries default to zero", "[io]") {
  const ProblemInstance inst = parse_text(
      "p qpflow 3 2 2\n"
      "e 1 2 1.0\n"
      "e 2 3 1.0\n"
      "d 1 2 2.5\n"
      "d 3 2 -2.5\n");
  CHECK(inst.demands.col(0).isZero(0.0));
  CHECK(inst.demands(1, 1) == 0.0);
}

TEST_CASE("parse errors carry line numbers", "[io]") {
  CHECK_THROWS_MATCHES(parse_text("p qpflow 2 1 1\ne 1 2 0.0\nd 1 1 0\n"), ParseError,
                       Catch::Matchers::MessageMatches(ContainsSubstring("line 2")));
  CHECK_THROWS_MATCHES(parse_text("p qpflow 2 1 1\ne 1 1 1.0\n"), ParseError,
                       Catch::Matchers::MessageMatches(ContainsSubstring("self-loop")));
  CHECK_THROWS_MATCHES(parse_text("p qpflow 2 1 1\ne 1 3 1.0\n"), ParseError,
                       Catch::Matchers::MessageMatches(ContainsSubstring("out of range")));
  CHECK_THROWS_MATCHES(parse_text("e 1 2 1.0\n"), ParseError,
                       Catch::Matchers::MessageMatches(ContainsSubstring("header")));
  CHECK_THROWS_MATCHES(parse_text("p qpflow 2 2 1\ne 1 2 1.0\n"), ParseError,
                       Catch::Matchers::MessageMatches(ContainsSubstring("promises")));
  CHECK_THROWS_MATCHES(parse_text("p qpflow 2 1 1\nz 1 2\n"), ParseError,
                       Catch::Matchers::MessageMatches(ContainsSubstring("unknown record")));
  CHECK_THROWS_AS(parse_text("p qpflow 2 1 1\ne 1 2 1.0\nd 1 1 notanumber\n"), ParseError);
}

TEST_CASE("unbalanced demand column is rejected with the commodity index", "[io]") {
  CHECK_THROWS_MATCHES(
      parse_text("p qpflow 2 1 2\ne 1 2 1.0\nd 1 2 1.0\n"), InfeasibleError,
      Catch::Matchers::MessageMatches(ContainsSubstring("commodity 2")));
}

TEST_CASE("instance write/parse round-trip", "[io]") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    const ProblemInstance inst = test::random_instance(rng());
    const ProblemInstance again = parse_text(write_instance(inst));
    REQUIRE(again.graph.vertex_count() == inst.graph.vertex_count());
    REQUIRE(again.graph.edge_count() == inst.graph.edge_count());
    for (int e = 0; e < inst.graph.edge_count(); ++e) {
      REQUIRE(again.graph.edge(e).tail == inst.graph.edge(e).tail);
      REQUIRE(again.graph.edge(e).head == inst.graph.edge(e).head);
      REQUIRE(again.graph.edge(e).weight == inst.graph.edge(e).weight);
    }
    REQUIRE(again.demands == inst.demands);
  }
}

namespace {

SolveReport sample_report() {
  SolveReport r;
  r.objective_trace = {0.4352, 0.36690228};
  r.residual_trace = {-0.11, -1e-9};
  r.gap_bounds = {0.07, 3.2e-7};
  r.feasibility_residual = {1e-16, 2e-16};
  r.iteration_seconds = {0.001, 0.0005};
  r.iterations = 1;
  r.terminated = "certified";
  r.params = {2.0, 2.0, 1, 1e-6, 1e-10, 100, 2, 42, 2, 2, 8064.0};
  r.timings = {0.0001, 0.001, 0.0002, 0.0004, 0.002};
  return r;
}

}  // namespace

TEST_CASE("json report round-trips numeric fields exactly", "[io]") {
  const SolveReport report = sample_report();
  const std::string text = report_to_json(report);
  const auto doc = nlohmann::json::parse(text);
  REQUIRE(doc["objective_trace"].size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(doc["objective_trace"][i].get<double>() == report.objective_trace[i]);
    CHECK(doc["residual_trace"][i].get<double>() == report.residual_trace[i]);
    CHECK(doc["gap_bounds"][i].get<double>() == report.gap_bounds[i]);
  }
  CHECK(doc["iterations"].get<long>() == 1);
  CHECK(doc["terminated"].get<std::string>() == "certified");
  CHECK(doc["params"]["q"].get<double>() == 2.0);
  CHECK(doc["params"]["seed"].get<std::uint64_t>() == 42);
  CHECK(doc.contains("timings"));
  const std::string bare = report_to_json(report, {.include_timings = false});
  CHECK_FALSE(nlohmann::json::parse(bare).contains("timings"));
}

TEST_CASE("csv report has the fixed 5-column layout", "[io]") {
  const std::string text = report_to_csv(sample_report());
  std::istringstream in(text);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "iter,objective,residual,gap_bound,seconds");
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 4);
    ++rows;
  }
  CHECK(rows == 2);
}

TEST_CASE("shortest round-trip decimals survive parsing", "[io]") {
  for (double v : {0.1, 1.0 / 3.0, 6.02e23, -1.2345678901234567e-300, 0.36690228}) {
    double back = 0.0;
    const std::string s = format_double(v);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), back);
    REQUIRE(res.ec == std::errc{});
    CHECK(back == v);
  }
}
