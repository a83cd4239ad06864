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

#ifndef QPFLOW_IO_HPP
#define QPFLOW_IO_HPP

#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qpflow/common.hpp"
#include "qpflow/driver.hpp"
#include "qpflow/graph.hpp"

namespace qpflow {

// Instance files are line oriented:
//   p qpflow <n> <m> <k>
//   e <u> <v> <weight>          (m lines, vertices 1-based)
//   d <v> <j> <value>           (missing entries are 0; repeats accumulate)
// with '#' comments and blank lines allowed anywhere. A positive demand
// value marks a vertex that supplies commodity j.

namespace detail {

inline std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

template <class T>
T parse_number(std::string_view token, int line_number, const char* what) {
  T value{};
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw ParseError("line " + std::to_string(line_number) + ": bad " + what + " '" +
                     std::string(token) + "'");
  }
  return value;
}

}  // namespace detail

inline ProblemInstance parse_instance_stream(std::istream& in, const std::string& name) {
  int n = 0, m = 0, k = 0;
  bool header_seen = false;
  std::vector<Edge> edges;
  std::vector<std::tuple<int, int, double>> demand_entries;

  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto tokens = detail::tokenize(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    const std::string_view kind = tokens[0];
    if (kind == "p") {
      if (header_seen) throw ParseError("line " + std::to_string(line_number) + ": duplicate header");
      if (tokens.size() != 5 || tokens[1] != "qpflow") {
        throw ParseError("line " + std::to_string(line_number) +
                         ": header must be 'p qpflow n m k'");
      }
      n = detail::parse_number<int>(tokens[2], line_number, "vertex count");
      m = detail::parse_number<int>(tokens[3], line_number, "edge count");
      k = detail::parse_number<int>(tokens[4], line_number, "commodity count");
      if (n < 2 || m < 1 || k < 1) {
        throw ParseError("line " + std::to_string(line_number) +
                         ": need n >= 2, m >= 1, k >= 1");
      }
      header_seen = true;
    } else if (kind == "e") {
      if (!header_seen) throw ParseError("line " + std::to_string(line_number) + ": edge before header");
      if (tokens.size() != 4) throw ParseError("line " + std::to_string(line_number) + ": edge needs 'e u v w'");
      const int u = detail::parse_number<int>(tokens[1], line_number, "vertex id");
      const int v = detail::parse_number<int>(tokens[2], line_number, "vertex id");
      const double w = detail::parse_number<double>(tokens[3], line_number, "weight");
      if (u < 1 || u > n || v < 1 || v > n) {
        throw ParseError("line " + std::to_string(line_number) + ": vertex id out of range");
      }
      if (u == v) throw ParseError("line " + std::to_string(line_number) + ": self-loop rejected");
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw ParseError("line " + std::to_string(line_number) + ": weight must be positive");
      }
      edges.push_back({u - 1, v - 1, w});
    } else if (kind == "d") {
      if (!header_seen) throw ParseError("line " + std::to_string(line_number) + ": demand before header");
      if (tokens.size() != 4) throw ParseError("line " + std::to_string(line_number) + ": demand needs 'd v j val'");
      const int v = detail::parse_number<int>(tokens[1], line_number, "vertex id");
      const int j = detail::parse_number<int>(tokens[2], line_number, "commodity id");
      const double val = detail::parse_number<double>(tokens[3], line_number, "demand value");
      if (v < 1 || v > n) throw ParseError("line " + std::to_string(line_number) + ": vertex id out of range");
      if (j < 1 || j > k) throw ParseError("line " + std::to_string(line_number) + ": commodity id out of range");
      if (!std::isfinite(val)) throw ParseError("line " + std::to_string(line_number) + ": demand not finite");
      demand_entries.emplace_back(v - 1, j - 1, val);
    } else {
      throw ParseError("line " + std::to_string(line_number) + ": unknown record '" +
                       std::string(kind) + "'");
    }
  }
  if (!header_seen) throw ParseError(name + ": missing 'p qpflow' header");
  if (static_cast<int>(edges.size()) != m) {
    throw ParseError(name + ": header promises " + std::to_string(m) + " edges, found " +
                     std::to_string(edges.size()));
  }

  Graph graph(n, std::move(edges));
  DemandMatrix demands = DemandMatrix::Zero(n, k);
  for (const auto& [v, j, val] : demand_entries) demands(v, j) += val;

  const ValidationReport validation = validate_instance(graph, demands);
  if (!validation.ok) {
    std::string msg = name + ": infeasible demands:";
    for (const auto& viol : validation.violations) {
      msg += viol.component < 0 ? " commodity " + std::to_string(viol.commodity + 1) +
                                      " does not sum to zero (sum " + format_double(viol.sum) + ");"
                                : " commodity " + std::to_string(viol.commodity + 1) +
                                      " unbalanced on component " +
                                      std::to_string(viol.component) + " (sum " +
                                      format_double(viol.sum) + ");";
    }
    throw InfeasibleError(msg);
  }
  return ProblemInstance{std::move(graph), std::move(demands)};
}

inline ProblemInstance parse_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_instance_stream(in, path);
}

inline std::string write_instance(const ProblemInstance& instance) {
  std::ostringstream out;
  const Graph& g = instance.graph;
  const int k = instance.commodity_count();
  out << "p qpflow " << g.vertex_count() << ' ' << g.edge_count() << ' ' << k << '\n';
  for (const Edge& e : g.edges()) {
    out << "e " << e.tail + 1 << ' ' << e.head + 1 << ' ' << format_double(e.weight) << '\n';
  }
  for (int v = 0; v < g.vertex_count(); ++v) {
    for (int j = 0; j < k; ++j) {
      if (instance.demands(v, j) != 0.0) {
        out << "d " << v + 1 << ' ' << j + 1 << ' ' << format_double(instance.demands(v, j))
            << '\n';
      }
    }
  }
  return out.str();
}

enum class ReportFormat { json, csv };

struct EmitOptions {
  bool include_timings = true;  // wall-clock entries are inherently nondeterministic
};

inline std::string report_to_json(const SolveReport& report, const EmitOptions& options = {}) {
  nlohmann::ordered_json doc;
  doc["objective_trace"] = report.objective_trace;
  doc["residual_trace"] = report.residual_trace;
  doc["gap_bounds"] = report.gap_bounds;
  doc["iterations"] = report.iterations;
  doc["terminated"] = report.terminated;
  doc["feasibility_residual"] = report.feasibility_residual;
  if (options.include_timings) {
    doc["timings"] = {{"initializer_seconds", report.timings.initializer_seconds},
                      {"subsolve_seconds", report.timings.subsolve_seconds},
                      {"certificate_seconds", report.timings.certificate_seconds},
                      {"line_search_seconds", report.timings.line_search_seconds},
                      {"total_seconds", report.timings.total_seconds}};
  }
  doc["params"] = {{"q", report.params.q},
                   {"p", report.params.p},
                   {"k", report.params.k},
                   {"eps", report.params.eps},
                   {"inner_tol", report.params.inner_tol},
                   {"max_outer_iters", report.params.max_outer_iters},
                   {"threads", report.params.threads},
                   {"seed", report.params.seed},
                   {"vertices", report.params.vertices},
                   {"edges", report.params.edges},
                   {"lambda", report.params.lambda}};
  return doc.dump(2) + "\n";
}

/// Per-iteration trace table; fixed 5-column layout.
inline std::string report_to_csv(const SolveReport& report) {
  std::ostringstream out;
  out << "iter,objective,residual,gap_bound,seconds\n";
  for (std::size_t i = 0; i < report.residual_trace.size(); ++i) {
    out << i << ',' << format_double(report.objective_trace[i]) << ','
        << format_double(report.residual_trace[i]) << ','
        << format_double(report.gap_bounds[i]) << ','
        << format_double(report.iteration_seconds[i]) << '\n';
  }
  return out.str();
}

inline void emit_report(const SolveReport& report, ReportFormat format,
                        const std::string& path, const EmitOptions& options = {}) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << (format == ReportFormat::json ? report_to_json(report, options)
                                       : report_to_csv(report));
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace qpflow

#endif  // QPFLOW_IO_HPP
