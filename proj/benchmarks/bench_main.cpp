#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "casbench/metastore.hpp"
#include "casbench/polynomial.hpp"
#include "casbench/posix_time.hpp"
#include "casbench/registry.hpp"
#include "casbench/reporting.hpp"

namespace {

using namespace casbench;

// Synthetic metadata: n systems, each with type, degree and variables.
std::string synthetic_turtle(int n) {
  std::string t = "@prefix sd: <http://symbolicdata.org/Data/Model#> .\n"
                  "@prefix ps: <http://symbolicdata.org/Data/PolynomialSystems/> .\n";
  for (int i = 0; i < n; ++i) {
    t += "ps:S" + std::to_string(i) + " a sd:IntPS ; sd:hasDegree " + std::to_string(i % 97) +
         " ; sd:hasVariables \"x,y,z\" .\n";
  }
  return t;
}

std::string dense_polynomial(int terms) {
  std::mt19937 rng(7);
  std::string p;
  for (int i = 0; i < terms; ++i) {
    if (i) p += rng() % 2 ? "+" : "-";
    p += std::to_string(1 + rng() % 1000) + "*x^" + std::to_string(rng() % 9) + "*y^" + std::to_string(rng() % 9);
  }
  return p;
}

void BM_ParseTurtle(benchmark::State& state) {
  const auto text = synthetic_turtle(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(parse_turtle(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseTurtle)->Arg(100)->Arg(1000);

void BM_QueryWithFilter(benchmark::State& state) {
  const auto store = parse_turtle(synthetic_turtle(static_cast<int>(state.range(0))));
  const std::vector<TriplePattern> patterns = {parse_pattern("?s a sd:IntPS", store.prefixes()),
                                               parse_pattern("?s sd:hasDegree ?d", store.prefixes())};
  const std::vector<NumericFilter> filters = {parse_filter("?d <= 36")};
  for (auto _ : state) benchmark::DoNotOptimize(query(store, patterns, filters));
}
BENCHMARK(BM_QueryWithFilter)->Arg(100)->Arg(1000);

void BM_ParsePolynomial(benchmark::State& state) {
  const auto text = dense_polynomial(static_cast<int>(state.range(0)));
  const std::vector<std::string> vars = {"x", "y"};
  for (auto _ : state) benchmark::DoNotOptimize(parse_polynomial(text, vars));
}
BENCHMARK(BM_ParsePolynomial)->Arg(10)->Arg(1000);

void BM_ParsePosixTime(benchmark::State& state) {
  const std::string text = "real 12.34\nuser 11.02\nsys 0.87\n";
  for (auto _ : state) benchmark::DoNotOptimize(parse_posix_time(text));
}
BENCHMARK(BM_ParsePosixTime);

void BM_RenderScript(benchmark::State& state) {
  const ComputationProblem problem{"GB", {"IntPS"}, {{"ordering", "lp"}}};
  Backend backend;
  backend.name = "casA";
  backend.invocation = "sh {script}";
  backend.templates["GB"] = "ring R = 0, ($vars$), $param:ordering$;\nideal I = $basis$;\nstd(I);\n";
  ProblemInstance instance;
  instance.name = "Big";
  instance.table = "IntPS";
  instance.variables = {"x", "y"};
  for (int i = 0; i < state.range(0); ++i) instance.basis.push_back(dense_polynomial(20));
  for (auto _ : state) benchmark::DoNotOptimize(render_script(problem, instance, backend));
}
BENCHMARK(BM_RenderScript)->Arg(4)->Arg(256);

RunReport synthetic_report(int jobs) {
  RunReport r;
  r.task = "bench";
  r.timestamp = "2026-10-18_09-00-00";
  r.machine = "bench";
  for (int i = 0; i < jobs; ++i) {
    JobResult j;
    j.instance = "I" + std::to_string(i / 4);
    j.backend = "cas" + std::to_string(i % 4);
    j.id = j.instance + "/" + j.backend;
    j.status = JobStatus::completed;
    j.exit_code = 0;
    j.times = TimeRecord{DecimalSeconds::from_micros(1'230'000 + i), DecimalSeconds::from_micros(1'000'000),
                         DecimalSeconds::from_micros(10'000)};
    r.jobs.push_back(j);
  }
  return r;
}

void BM_ResultsXmlRoundTrip(benchmark::State& state) {
  const auto report = synthetic_report(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(parse_results_xml(render_results_xml(report)));
}
BENCHMARK(BM_ResultsXmlRoundTrip)->Arg(16)->Arg(1024);

void BM_ResultsHtml(benchmark::State& state) {
  const auto report = synthetic_report(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(render_results_html(report));
}
BENCHMARK(BM_ResultsHtml)->Arg(16)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
