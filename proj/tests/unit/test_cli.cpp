#include <csignal>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"

#include "casbench/fsutil.hpp"
#include "casbench/reporting.hpp"
#include "cli.hpp"
#include "support.hpp"

using namespace casbench;
using namespace std::chrono_literals;
using testing::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli_run(std::vector<std::string> args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> create_args(const fs::path& out) {
  return {"create", "--resources", testing::resources_dir().string(), "--problem", "GB_Z_lp",
          "--instances", "IntPS/Amrhein,IntPS/Caprasse", "--backends", "casA,casB", "--out", out.string()};
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

void check_error_line(const Result& r) {
  CHECK(r.code != 0);
  CHECK(r.err.starts_with("error: "));
  CHECK(lines(r.err) == 1);
}

fs::path only_results_dir(const fs::path& folder) {
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(folder / "results")) dirs.push_back(e.path());
  REQUIRE(dirs.size() == 1);
  return dirs.front();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("create the worked example") {
    TempDir dir;
    const auto r = cli_run(create_args(dir / "T1"));
    CHECK(r.code == 0);
    CHECK(load_taskfolder(dir / "T1").scripts.size() == 4);
  }

  TEST_CASE("unknown problem exits 2 listing the registered ones") {
    TempDir dir;
    auto args = create_args(dir / "T");
    args[4] = "NOPE";
    const auto r = cli_run(args);
    CHECK(r.code == 2);
    check_error_line(r);
    CHECK(r.err.find("NOPE") != std::string::npos);
    CHECK(r.err.find("GB_Z_lp") != std::string::npos);
  }

  TEST_CASE("unknown instance and backend exit 2 naming them") {
    TempDir dir;
    auto args = create_args(dir / "T");
    args[6] = "IntPS/Nope";
    auto r = cli_run(args);
    CHECK(r.code == 2);
    CHECK(r.err.find("Nope") != std::string::npos);
    args = create_args(dir / "T");
    args[8] = "casZ";
    r = cli_run(args);
    CHECK(r.code == 2);
    CHECK(r.err.find("casZ") != std::string::npos);
  }

  TEST_CASE("query preselection with no match exits 2") {
    TempDir dir;
    const auto r = cli_run({"create", "--resources", testing::resources_dir().string(), "--metadata",
                            (testing::fixtures_dir() / "caprasse.ttl").string(), "--problem", "GB_Z_lp", "--query",
                            "hasDegree <= 36", "--backends", "casA", "--out", (dir / "T").string()});
    CHECK(r.code == 2);
    check_error_line(r);
    CHECK(r.err.find("no instances matched") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "T"));
  }

  TEST_CASE("query preselection picks Caprasse") {
    TempDir dir;
    const auto r = cli_run({"create", "--resources", testing::resources_dir().string(), "--metadata",
                            (testing::fixtures_dir() / "caprasse.ttl").string(), "--problem", "GB_Z_lp", "--query",
                            "sd:hasDegree > 36", "--backends", "casA", "--out", (dir / "T").string()});
    CHECK(r.code == 0);
    CHECK(load_taskfolder(dir / "T").task.instances == std::vector<InstanceRef>{{"IntPS", "Caprasse"}});
  }

  TEST_CASE("refusing to clobber exits 3") {
    TempDir dir;
    CHECK(cli_run(create_args(dir / "T1")).code == 0);
    const auto r = cli_run(create_args(dir / "T1"));
    CHECK(r.code == 3);
    check_error_line(r);
  }

  TEST_CASE("non-interactive create is deterministic") {
    TempDir dir;
    CHECK(cli_run(create_args(dir / "A" / "T1")).code == 0);
    CHECK(cli_run(create_args(dir / "B" / "T1")).code == 0);
    CHECK(testing::tree_snapshot(dir / "A" / "T1") == testing::tree_snapshot(dir / "B" / "T1"));
  }

  TEST_CASE("interactive three-step dialog") {
    TempDir dir;
    const auto r = cli_run({"create", "-i", "--resources", testing::resources_dir().string()},
                           "1\nall\ncasB, 1\nnone\n" + (dir / "T").string() + "\n");
    CHECK(r.code == 0);
    CHECK(r.out.find("Step 1/3") != std::string::npos);
    CHECK(r.out.find("Step 3/3") != std::string::npos);
    const auto folder = load_taskfolder(dir / "T");
    CHECK(folder.task.backends == std::vector<std::string>{"casB", "casA"});
    CHECK(folder.task.instances.size() == 2);
    CHECK(folder.settings.time_command.empty());
  }

  TEST_CASE("interactive input ending early is an error") {
    const auto r = cli_run({"create", "-i", "--resources", testing::resources_dir().string()}, "1\n");
    CHECK(r.code == 2);
    CHECK(r.err.starts_with("error: "));
  }

  TEST_CASE("config file supplies the resource root") {
    TempDir dir;
    write_file_atomic(dir / "casbench.json", "{\"resources\": \"" + testing::resources_dir().string() + "\"}");
    const auto r = cli_run({"--config", (dir / "casbench.json").string(), "create", "--problem", "GB_Z_lp",
                            "--instances", "IntPS/Caprasse", "--backends", "casA", "--out", (dir / "T").string()});
    CHECK(r.code == 0);
    const auto missing = cli_run({"--config", (dir / "nope.json").string(), "create"});
    CHECK(missing.code == 2);
  }

  TEST_CASE("run a 4-job stub folder") {
    TempDir dir;
    REQUIRE(cli_run(create_args(dir / "T1")).code == 0);
    const auto r = cli_run({"run", (dir / "T1").string()});
    CHECK(r.code == 0);
    const auto results = only_results_dir(dir / "T1");
    CHECK(r.out == results.string() + "\n");
    std::size_t stdouts = 0;
    for (const auto& e : fs::recursive_directory_iterator(results)) stdouts += e.path().filename() == "stdout.txt";
    CHECK(stdouts == 4);
  }

  TEST_CASE("time limit on sleepers yields timeouts and exit 0") {
    TempDir dir;
    testing::make_stub_folder(dir / "T", {{"s1", "sleep 10"}, {"s2", "sleep 10"}});
    const auto r = cli_run({"run", (dir / "T").string(), "--time-limit", "1", "--grace", "1"});
    CHECK(r.code == 0);
    const auto report = read_results_xml(only_results_dir(dir / "T") / "results.xml");
    for (const auto& j : report.jobs) CHECK(j.status == JobStatus::timeout);
  }

  TEST_CASE("unloadable taskfolder exits 2") {
    TempDir dir;
    const auto r = cli_run({"run", (dir / "nothing").string()});
    CHECK(r.code == 2);
    check_error_line(r);
  }

  TEST_CASE("bad limits exit 2") {
    TempDir dir;
    testing::make_stub_folder(dir / "T", {{"a", "true"}});
    CHECK(cli_run({"run", (dir / "T").string(), "--time-limit", "soon"}).code == 2);
    CHECK(cli_run({"run", (dir / "T").string(), "--jobs", "0"}).code == 2);
  }

  TEST_CASE("second interrupt exits 130, resume skips completed jobs") {
    TempDir dir;
    const auto folder = testing::make_stub_folder(
        dir / "T", {{"one", "echo 1"}, {"two", "sleep 1; echo 2"}, {"three", "echo 3"}});
    std::thread interrupter([&] {
      const auto deadline = std::chrono::steady_clock::now() + 5s;
      while (std::chrono::steady_clock::now() < deadline) {
        if (fs::exists(dir / "T" / "results")) {
          for (const auto& e : fs::directory_iterator(dir / "T" / "results")) {
            if (fs::exists(e.path() / "Caprasse" / "two")) {
              std::raise(SIGINT);
              std::raise(SIGINT);
              return;
            }
          }
        }
        std::this_thread::sleep_for(5ms);
      }
    });
    const auto first = cli_run({"run", (dir / "T").string()});
    interrupter.join();
    CHECK(first.code == 130);
    const auto results = only_results_dir(dir / "T");
    const auto second = cli_run({"run", (dir / "T").string(), "--resume", results.string()});
    CHECK(second.code == 0);
    CHECK(second.err.find("Caprasse/one") == std::string::npos);
    CHECK(second.err.find("Caprasse/two") != std::string::npos);
    CHECK(second.err.find("Caprasse/three") != std::string::npos);
    for (const auto& j : read_results_xml(results / "results.xml").jobs) CHECK(j.status == JobStatus::completed);
  }

  TEST_CASE("query prints tab-separated bindings") {
    const auto ttl = (testing::fixtures_dir() / "caprasse.ttl").string();
    auto r = cli_run({"query", "--metadata", ttl, "--pattern", "?s sd:hasDegree ?d"});
    CHECK(r.code == 0);
    CHECK(lines(r.out) == 1);
    CHECK(r.out.ends_with("\t56\n"));
    r = cli_run({"query", "--metadata", ttl, "--pattern", "?s sd:hasDimension ?d"});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    r = cli_run({"query", "--metadata", ttl, "--pattern", "?s sd:hasDegree ?d", "--filter", "?d <= 36"});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    r = cli_run({"query", "--metadata", ttl, "-p", "?s a ?c", "-p", "?s sd:hasVariables ?v"});
    CHECK(r.out == "<http://symbolicdata.org/Data/PolynomialSystems/Caprasse>\t"
                   "<http://symbolicdata.org/Data/Model/IntPS>\tx,y,z,t\n");
  }

  TEST_CASE("malformed turtle exits 2 with a line number") {
    TempDir dir;
    write_file_atomic(dir / "bad.ttl", "@prefix sd: <http://e/> .\n\nsd:a sd:b \"open .\n");
    const auto r = cli_run({"query", "--metadata", (dir / "bad.ttl").string(), "-p", "?s ?p ?o"});
    CHECK(r.code == 2);
    check_error_line(r);
    CHECK(r.err.find("line 3") != std::string::npos);
  }

  TEST_CASE("report regenerates html and timings") {
    TempDir dir;
    REQUIRE(cli_run(create_args(dir / "T1")).code == 0);
    REQUIRE(cli_run({"run", (dir / "T1").string()}).code == 0);
    const auto results = only_results_dir(dir / "T1");
    fs::remove(results / "index.html");
    CHECK(cli_run({"report", results.string(), "--html"}).code == 0);
    const auto html = read_file(results / "index.html");
    std::size_t rows = 0;
    for (auto p = html.find("<tr class="); p != std::string::npos; p = html.find("<tr class=", p + 1)) ++rows;
    CHECK(rows == 4);
    CHECK(cli_run({"report", results.string(), "--timings", "--out", (dir / "t.csv").string()}).code == 0);
    const auto csv = read_file(dir / "t.csv");
    CHECK(lines(csv) == 3);
    CHECK(csv.starts_with("instance,casA,casB\n"));
  }

  TEST_CASE("report on corrupt or missing xml exits 2") {
    TempDir dir;
    write_file_atomic(dir / "results.xml", "<Run><task>");
    auto r = cli_run({"report", dir.path().string()});
    CHECK(r.code == 2);
    check_error_line(r);
    r = cli_run({"report", (dir / "nowhere").string()});
    CHECK(r.code == 2);
  }

  TEST_CASE("usage errors") {
    CHECK(cli_run({}).code == 2);
    CHECK(cli_run({"frobnicate"}).code == 2);
    CHECK(cli_run({"--help"}).code == 0);
  }
}
