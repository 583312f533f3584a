#include <random>

#include "doctest.h"

#include "casbench/error.hpp"
#include "casbench/fsutil.hpp"
#include "casbench/reporting.hpp"
#include "support.hpp"

using namespace casbench;
using testing::TempDir;

namespace {

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

DecimalSeconds cs(std::int64_t centis) { return DecimalSeconds::from_micros(centis * 10000); }

JobResult job(const std::string& instance, const std::string& backend, JobStatus status, std::int64_t real_cs = 0) {
  JobResult r;
  r.id = instance + "/" + backend;
  r.instance = instance;
  r.backend = backend;
  r.status = status;
  if (is_terminal(status) && status != JobStatus::killed_by_user) {
    r.exit_code = status == JobStatus::completed ? 0 : 1;
    r.times = TimeRecord{cs(real_cs), cs(real_cs / 2), cs(1)};
    r.wall = cs(real_cs + 1);
    r.peak_rss_bytes = 1234567;
    r.started = "2026-10-18T09:00:00.000Z";
    r.ended = "2026-10-18T09:00:01.000Z";
  }
  r.stdout_file = instance + "/" + backend + "/stdout.txt";
  r.stderr_file = instance + "/" + backend + "/stderr.txt";
  return r;
}

RunReport two_by_two(const std::string& stamp = "2026-10-18_09-00-00") {
  RunReport r;
  r.task = "T1";
  r.timestamp = stamp;
  r.machine = "host";
  r.jobs = {job("Amrhein", "casA", JobStatus::completed, 150), job("Amrhein", "casB", JobStatus::completed, 305),
            job("Caprasse", "casA", JobStatus::completed, 7), job("Caprasse", "casB", JobStatus::completed, 1200)};
  return r;
}

}  // namespace

TEST_SUITE("reporting") {
  TEST_CASE("completed 2x2 run renders four completed jobs") {
    const auto xml = render_results_xml(two_by_two());
    CHECK(count(xml, "<job ") == 4);
    CHECK(count(xml, "<status>completed</status>") == 4);
  }

  TEST_CASE("live statuses appear and the page refreshes") {
    auto r = two_by_two();
    r.jobs[2] = job("Caprasse", "casA", JobStatus::running);
    r.jobs[3] = job("Caprasse", "casB", JobStatus::waiting);
    const auto xml = render_results_xml(r);
    CHECK(xml.find("<status>running</status>") != std::string::npos);
    CHECK(xml.find("<status>waiting</status>") != std::string::npos);
    CHECK(render_results_html(r).find("http-equiv=\"refresh\"") != std::string::npos);
    CHECK(render_results_html(two_by_two()).find("http-equiv=\"refresh\"") == std::string::npos);
  }

  TEST_CASE("html has one row per job") {
    const auto r = two_by_two();
    CHECK(count(render_results_html(r), "<tr class=") == r.jobs.size());
  }

  TEST_CASE("timeout row shows the wall limit, verdict defaults to unchecked") {
    auto r = two_by_two();
    r.limits.wall = DecimalSeconds::from_micros(1'000'000);
    r.jobs[1] = job("Amrhein", "casB", JobStatus::timeout, 101);
    const auto html = render_results_html(r);
    CHECK(html.find("timeout (limit 1.00 s)") != std::string::npos);
    CHECK(count(html, "<td>unchecked</td>") == 4);
  }

  TEST_CASE("parallel runs carry a warning") {
    auto r = two_by_two();
    r.workers = 2;
    CHECK(render_results_html(r).find("class=\"warning\"") != std::string::npos);
    CHECK(render_results_html(two_by_two()).find("class=\"warning\"") == std::string::npos);
  }

  TEST_CASE("markup is escaped") {
    auto r = two_by_two();
    r.machine = "<script>&";
    r.jobs[0].diagnostic = "a < b";
    const auto html = render_results_html(r);
    CHECK(html.find("<script>&") == std::string::npos);
    CHECK(parse_results_xml(render_results_xml(r)) == r);
  }

  TEST_CASE("xml round trip over random reports") {
    std::mt19937_64 rng(3);
    const JobStatus statuses[] = {JobStatus::waiting, JobStatus::running,  JobStatus::completed,
                                  JobStatus::error,   JobStatus::timeout,  JobStatus::memout,
                                  JobStatus::killed_by_user};
    for (int i = 0; i < 100; ++i) {
      RunReport r;
      r.task = "T" + std::to_string(i);
      r.timestamp = "2026-10-18_09-00-0" + std::to_string(i % 10);
      r.machine = "m";
      r.workers = 1 + i % 3;
      if (i % 2) r.limits.wall = cs(std::uniform_int_distribution<int>(1, 10000)(rng));
      if (i % 3) r.limits.memory_bytes = std::uniform_int_distribution<std::uint64_t>(1, 1ull << 40)(rng);
      for (int k = 0; k < 1 + i % 6; ++k) {
        auto j = job("I" + std::to_string(k), "cas" + std::to_string(i % 2), statuses[rng() % 7],
                     std::uniform_int_distribution<int>(0, 99999)(rng));
        if (rng() % 3 == 0) j.verdict = Verdict::accepted;
        if (rng() % 4 == 0) j.diagnostic = "signal 9";
        r.jobs.push_back(j);
      }
      CHECK(parse_results_xml(render_results_xml(r)) == r);
    }
  }

  TEST_CASE("files round trip") {
    TempDir dir;
    const auto r = two_by_two();
    write_results_xml(r, dir / "results.xml");
    write_results_html(r, dir / "index.html");
    CHECK(read_results_xml(dir / "results.xml") == r);
    CHECK(count(read_file(dir / "index.html"), "<tr class=") == 4);
  }

  TEST_CASE("corrupt xml is a parse error") {
    for (const char* text : {"", "<Run>", "<Run><task>T</task></Run>", "<Nope/>",
                             "<Run><task>T</task><timestamp>x</timestamp><machine/><limits><workers>1</workers>"
                             "</limits><job id=\"a/b\" instance=\"a\" backend=\"b\"><status>bogus</status></job></Run>"}) {
      CAPTURE(text);
      try {
        parse_results_xml(text);
        FAIL("expected parse error");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::parse);
      }
    }
  }

  TEST_CASE("verifier verdicts") {
    TempDir dir;
    write_file_atomic(dir / "out.txt", "x");
    write_file_atomic(dir / "inst.xml", "y");
    CHECK(verify_job(Verifier{"P", "exit 0"}, dir / "inst.xml", dir / "out.txt") == Verdict::accepted);
    CHECK(verify_job(Verifier{"P", "exit 1"}, dir / "inst.xml", dir / "out.txt") == Verdict::rejected);
    std::string diag;
    CHECK(verify_job(Verifier{"P", "exit 42"}, dir / "inst.xml", dir / "out.txt", &diag) == Verdict::unchecked);
    CHECK_FALSE(diag.empty());
    CHECK(verify_job(Verifier{"P", "grep -q x {output} && test -f {instance}"}, dir / "inst.xml", dir / "out.txt") ==
          Verdict::accepted);
  }

  TEST_CASE("timings of a 2x2 run") {
    const std::vector<RunReport> runs = {two_by_two()};
    const auto t = timings_table(runs);
    CHECK(t.header == std::vector<std::string>{"instance", "casA", "casB"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == std::vector<std::string>{"Amrhein", "1.50", "3.05"});
    CHECK(t.rows[1] == std::vector<std::string>{"Caprasse", "0.07", "12.00"});
    CHECK(to_csv(t) == "instance,casA,casB\nAmrhein,1.50,3.05\nCaprasse,0.07,12.00\n");
  }

  TEST_CASE("a timeout cell reads timeout") {
    auto r = two_by_two();
    r.jobs[3] = job("Caprasse", "casB", JobStatus::timeout, 100);
    const std::vector<RunReport> runs = {r};
    CHECK(timings_table(runs).rows[1][2] == "timeout");
  }

  TEST_CASE("two runs double the columns grouped by timestamp") {
    const std::vector<RunReport> runs = {two_by_two("2026-10-18_09-00-00"), two_by_two("2026-10-19_09-00-00")};
    const auto t = timings_table(runs);
    CHECK(t.header == std::vector<std::string>{"instance", "2026-10-18_09-00-00/casA", "2026-10-18_09-00-00/casB",
                                               "2026-10-19_09-00-00/casA", "2026-10-19_09-00-00/casB"});
    CHECK(t.rows.size() == 2);
    CHECK(t.rows[0].size() == 5);
  }

  TEST_CASE("timings of different tasks is a validation error") {
    auto other = two_by_two();
    other.task = "T2";
    const std::vector<RunReport> runs = {two_by_two(), other};
    CHECK_THROWS_AS(timings_table(runs), Error);
  }
}
