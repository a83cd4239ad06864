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

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qpflow/driver.hpp"
#include "qpflow/io.hpp"
#include "qpflow/oracle.hpp"

namespace {

constexpr int kExitCertified = 0;
constexpr int kExitError = 1;
constexpr int kExitUncertified = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitParse = 4;

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("QPFLOW_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  return qpflow::default_thread_count();
}

int run_solve(const std::string& input, double q, double p, double eps, long max_iters,
              double inner_tol, int threads, const std::string& output,
              const std::string& format, std::uint64_t seed) {
  const qpflow::ProblemInstance instance = qpflow::parse_instance(input);
  qpflow::QPParams params{q, p, instance.commodity_count()};
  qpflow::DriverConfig cfg;
  cfg.eps = eps;
  cfg.max_outer_iters = max_iters;
  cfg.subsolver.inner_tol = inner_tol;
  cfg.threads = resolve_threads(threads);
  cfg.seed = seed;

  auto [flow, report] = qpflow::solve(instance, params, cfg);
  const qpflow::ReportFormat fmt =
      format == "csv" ? qpflow::ReportFormat::csv : qpflow::ReportFormat::json;
  if (output.empty()) {
    std::cout << (fmt == qpflow::ReportFormat::json ? qpflow::report_to_json(report)
                                                    : qpflow::report_to_csv(report));
  } else {
    qpflow::emit_report(report, fmt, output);
    std::cout << "objective " << qpflow::format_double(report.objective_trace.back())
              << ", iterations " << report.iterations << ", terminated "
              << report.terminated << ", report written to " << output << "\n";
  }
  std::cerr << "terminated: " << report.terminated << "\n";
  return report.terminated == "certified" ? kExitCertified : kExitUncertified;
}

int run_check(const std::vector<double>& qs, const std::vector<double>& ps,
              const std::vector<int>& ks, long samples, std::uint64_t seed, int threads) {
  qpflow::LemmaGrid grid;
  if (!qs.empty()) grid.qs = qs;
  if (!ps.empty()) grid.ps = ps;
  if (!ks.empty()) grid.ks = ks;
  const qpflow::LemmaValidationReport report =
      qpflow::validate_lemmas(grid, samples, seed, resolve_threads(threads));
  std::cout << report.to_text();
  if (report.all_passed()) {
    std::cout << "all lemma suites passed\n";
    return kExitCertified;
  }
  std::cout << "lemma violations found\n";
  return kExitError;
}

int run_oracle(const std::string& input, double q, double p) {
  const qpflow::ProblemInstance instance = qpflow::parse_instance(input);
  const qpflow::QPParams params{q, p, instance.commodity_count()};
  const qpflow::OracleResult result = qpflow::oracle_solve(instance, params);
  std::cout << "{\n  \"objective\": " << qpflow::format_double(result.objective)
            << ",\n  \"iterations\": " << result.iterations << "\n}\n";
  return kExitCertified;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lq,p-norm multicommodity flow solver"};
  app.require_subcommand(1);

  std::string input, output, format = "json";
  double q = 2.0, p = 2.0, eps = 1e-3, inner_tol = 1e-10;
  long max_iters = 0;
  int threads = 0;
  std::uint64_t seed = 0;
  long samples = 100000;
  std::vector<double> q_grid, p_grid;
  std::vector<int> k_grid;

  CLI::App* solve = app.add_subcommand("solve", "solve an instance to (1+eps) accuracy");
  solve->add_option("--input", input, "instance file")->required();
  solve->add_option("--q", q, "lq exponent, in (1, 2]")->required();
  solve->add_option("--p", p, "lp exponent, >= 2")->required();
  solve->add_option("--eps", eps, "target relative accuracy")->required();
  solve->add_option("--max-iters", max_iters, "outer iteration cap (0 = derived)");
  solve->add_option("--inner-tol", inner_tol, "subsolver additive tolerance");
  solve->add_option("--threads", threads, "worker threads (0 = QPFLOW_THREADS or hardware)");
  solve->add_option("--output", output, "report path (default: stdout)");
  solve->add_option("--format", format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  solve->add_option("--seed", seed, "seed echoed into the report");

  CLI::App* check = app.add_subcommand("check", "run the lemma validation suites");
  check->add_option("--q-grid", q_grid, "q values")->delimiter(',');
  check->add_option("--p-grid", p_grid, "p values")->delimiter(',');
  check->add_option("--k-grid", k_grid, "commodity counts")->delimiter(',');
  check->add_option("--samples", samples, "samples per suite");
  check->add_option("--seed", seed, "RNG seed");
  check->add_option("--threads", threads, "worker threads");

  CLI::App* oracle = app.add_subcommand("oracle", "brute-force objective on a small instance");
  oracle->add_option("--input", input, "instance file")->required();
  oracle->add_option("--q", q, "lq exponent")->required();
  oracle->add_option("--p", p, "lp exponent")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      return run_solve(input, q, p, eps, max_iters, inner_tol, threads, output, format, seed);
    }
    if (check->parsed()) {
      return run_check(q_grid, p_grid, k_grid, samples, seed, threads);
    }
    return run_oracle(input, q, p);
  } catch (const qpflow::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const qpflow::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
