#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include "doctest.h"

#include "casbench/error.hpp"
#include "casbench/fsutil.hpp"
#include "casbench/reporting.hpp"
#include "casbench/runner.hpp"
#include "support.hpp"

using namespace casbench;
using namespace std::chrono_literals;
using testing::TempDir;

namespace {

RunOptions quiet_options(std::vector<std::string>* log = nullptr) {
  RunOptions o;
  o.control_poll = 50ms;
  o.sample_interval = 50ms;
  if (log != nullptr) {
    auto mutex = std::make_shared<std::mutex>();
    o.log = [log, mutex](std::string_view line) {
      std::lock_guard lock(*mutex);
      log->emplace_back(line);
    };
  }
  return o;
}

std::size_t count_status(const RunOutcome& o, JobStatus s) {
  return static_cast<std::size_t>(
      std::count_if(o.results.begin(), o.results.end(), [s](const JobResult& r) { return r.status == s; }));
}

const testing::StubBackends kEchoes = {{"casA", "echo A $name$"}, {"casB", "echo B $name$"}};

}  // namespace

TEST_SUITE("runner") {
  TEST_CASE("2x2 stub jobs all complete and the report files exist") {
    TempDir dir;
    const auto folder = testing::make_stub_folder(dir / "T", kEchoes, {"Amrhein", "Caprasse"});
    ControlChannel control;
    const auto out = run_all(folder, quiet_options(), control);
    REQUIRE(out.results.size() == 4);
    CHECK(count_status(out, JobStatus::completed) == 4);
    CHECK_FALSE(out.aborted);
    CHECK(out.results_dir.parent_path() == dir / "T" / "results");
    for (const char* f : {"manifest", "results.xml", "index.html", "control"}) CHECK(fs::exists(out.results_dir / f));
    CHECK(read_file(out.results_dir / "Caprasse/casB/stdout.txt") == "B Caprasse\n");
    const auto report = read_results_xml(out.results_dir / "results.xml");
    CHECK(report.jobs == out.results);
    CHECK(parse_manifest(read_file(out.results_dir / "manifest")).size() == 4);
  }

  TEST_CASE("a failing job does not stop the run") {
    TempDir dir;
    const auto folder = testing::make_stub_folder(dir / "T", {{"bad", "exit 3"}, {"good", "echo ok"}});
    ControlChannel control;
    const auto out = run_all(folder, quiet_options(), control);
    CHECK(out.results[0].status == JobStatus::error);
    CHECK(out.results[0].exit_code == 3);
    CHECK(out.results[1].status == JobStatus::completed);
  }

  TEST_CASE("timeout then the next waiting job runs") {
    TempDir dir;
    const auto folder = testing::make_stub_folder(dir / "T", {{"slow", "sleep 10"}, {"fast", "echo ok"}});
    ControlChannel control;
    auto options = quiet_options();
    options.limits.wall = DecimalSeconds::from_micros(1'000'000);
    const auto out = run_all(folder, options, control);
    CHECK(out.results[0].status == JobStatus::timeout);
    CHECK(out.results[0].wall.seconds() >= 1.0);
    CHECK(out.results[0].wall.seconds() <= 6.5);
    CHECK(out.results[1].status == JobStatus::completed);
    const auto html = read_file(out.results_dir / "index.html");
    CHECK(html.find("timeout (limit 1.00 s)") != std::string::npos);
  }

  TEST_CASE("kill through the control file, the run continues") {
    TempDir dir;
    const auto folder = testing::make_stub_folder(dir / "T", {{"sleeper", "sleep 10"}, {"after", "echo ok"}});
    ControlChannel control;
    std::vector<std::string> log;
    auto options = quiet_options(&log);
    options.results_root = dir / "results";
    fs::create_directories(dir / "results");
    std::thread killer([&] {
      const auto deadline = std::chrono::steady_clock::now() + 5s;
      while (std::chrono::steady_clock::now() < deadline) {
        for (const auto& e : fs::directory_iterator(dir / "results")) {
          if (control.status("Caprasse/sleeper") == JobStatus::running) {
            std::this_thread::sleep_for(200ms);
            write_kill_command(e.path() / "control", "Caprasse/sleeper");
            return;
          }
        }
        std::this_thread::sleep_for(20ms);
      }
    });
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = run_all(folder, options, control);
    killer.join();
    CHECK(out.results[0].status == JobStatus::killed_by_user);
    CHECK(out.results[0].wall.seconds() < 2.0);
    CHECK(out.results[1].status == JobStatus::completed);
    CHECK(std::chrono::steady_clock::now() - t0 < 5s);
  }

  TEST_CASE("kill requests for waiting and finished jobs") {
    TempDir dir;
    const auto folder =
        testing::make_stub_folder(dir / "T", {{"first", "echo one"}, {"second", "sleep 0.5"}, {"third", "echo three"}});
    ControlChannel control;
    std::vector<std::string> log;
    auto options = quiet_options(&log);
    std::atomic<bool> finished_ack{false};
    std::thread killer([&] {
      while (control.status("Caprasse/second") != JobStatus::running) std::this_thread::sleep_for(5ms);
      finished_ack = control.request_kill("Caprasse/first").kind == KillAck::Kind::already_finished;
      control.request_kill("Caprasse/third");
    });
    const auto out = run_all(folder, options, control);
    killer.join();
    CHECK(finished_ack);
    CHECK(out.results[0].status == JobStatus::completed);
    CHECK(out.results[1].status == JobStatus::completed);
    CHECK(out.results[2].status == JobStatus::killed_by_user);
    CHECK(out.executed == std::vector<std::string>{"Caprasse/first", "Caprasse/second"});
  }

  TEST_CASE("interrupt after the first job then resume runs exactly the rest") {
    TempDir dir;
    const auto folder = testing::make_stub_folder(
        dir / "T", {{"one", "echo 1"}, {"two", "sleep 0.5; echo 2"}, {"three", "sleep 0.2; echo 3"}});
    ControlChannel::install_interrupt_handler();
    ControlChannel control;
    auto options = quiet_options();
    options.interrupts = true;
    std::thread interrupter([&] {
      while (control.status("Caprasse/two") != JobStatus::running) std::this_thread::sleep_for(5ms);
      ControlChannel::simulate_interrupt();
      ControlChannel::simulate_interrupt();
    });
    const auto first = run_all(folder, options, control);
    interrupter.join();
    ControlChannel::restore_interrupt_handler();
    CHECK(first.aborted);
    CHECK(first.executed == std::vector<std::string>{"Caprasse/one"});
    CHECK(first.results[1].status == JobStatus::waiting);
    CHECK(first.results[2].status == JobStatus::waiting);

    ControlChannel again;
    const auto second = resume(folder, first.results_dir, quiet_options(), again);
    CHECK(second.results_dir == first.results_dir);
    CHECK_FALSE(second.aborted);
    CHECK(second.executed == std::vector<std::string>{"Caprasse/two", "Caprasse/three"});
    CHECK(count_status(second, JobStatus::completed) == 3);
    CHECK(second.results[0] == first.results[0]);
  }

  TEST_CASE("resume with nothing recorded is a fresh run") {
    TempDir dir;
    const auto folder = testing::make_stub_folder(dir / "T", kEchoes);
    fs::create_directories(dir / "prev");
    write_file_atomic(dir / "prev" / "manifest", serialize_manifest("stub", {}));
    ControlChannel control;
    const auto out = resume(folder, dir / "prev", quiet_options(), control);
    CHECK(out.executed == std::vector<std::string>{"Caprasse/casA", "Caprasse/casB"});
  }

  TEST_CASE("editing one script re-runs only that job") {
    TempDir dir;
    const auto folder = testing::make_stub_folder(dir / "T", kEchoes, {"Amrhein", "Caprasse"});
    ControlChannel c1;
    const auto first = run_all(folder, quiet_options(), c1);
    std::ofstream(folder.root / "casSources/Amrhein/casB/executablefile.sdc", std::ios::app) << "\necho edited\n";
    ControlChannel c2;
    const auto second = resume(load_taskfolder(folder.root), first.results_dir, quiet_options(), c2);
    CHECK(second.executed == std::vector<std::string>{"Amrhein/casB"});
    CHECK(read_file(second.results_dir / "Amrhein/casB/stdout.txt") == "B Amrhein\nedited\n");
  }

  TEST_CASE("corrupt manifest means a full re-run with a warning") {
    TempDir dir;
    const auto folder = testing::make_stub_folder(dir / "T", kEchoes);
    ControlChannel c1;
    const auto first = run_all(folder, quiet_options(), c1);
    std::ofstream(first.results_dir / "manifest") << "{ truncated";
    std::vector<std::string> log;
    ControlChannel c2;
    const auto second = resume(folder, first.results_dir, quiet_options(&log), c2);
    CHECK(second.executed.size() == 2);
    CHECK(std::any_of(log.begin(), log.end(), [](const std::string& l) { return l.find("manifest") != std::string::npos; }));
  }

  TEST_CASE("resume of a missing directory is an error") {
    TempDir dir;
    const auto folder = testing::make_stub_folder(dir / "T", kEchoes);
    ControlChannel c;
    CHECK_THROWS_AS(resume(folder, dir / "nope", quiet_options(), c), Error);
  }

  TEST_CASE("statuses never go back from terminal while the report is rewritten") {
    TempDir dir;
    const auto folder = testing::make_stub_folder(
        dir / "T", {{"a", "sleep 0.2"}, {"b", "sleep 0.2"}, {"c", "exit 1"}}, {"Amrhein", "Caprasse"});
    ControlChannel control;
    auto options = quiet_options();
    options.results_root = dir / "results";
    std::atomic<bool> done{false};
    std::map<std::string, JobStatus> last;
    bool regressed = false;
    std::size_t snapshots = 0;
    std::thread watcher([&] {
      while (!done) {
        if (fs::exists(dir / "results")) {
          for (const auto& e : fs::directory_iterator(dir / "results")) {
            try {
              const auto report = read_results_xml(e.path() / "results.xml");
              ++snapshots;
              for (const auto& j : report.jobs) {
                if (last.contains(j.id) && is_terminal(last[j.id]) && !is_terminal(j.status)) regressed = true;
                last[j.id] = j.status;
              }
            } catch (const Error&) {
            }
          }
        }
        std::this_thread::sleep_for(10ms);
      }
    });
    const auto out = run_all(folder, options, control);
    done = true;
    watcher.join();
    CHECK(snapshots > 0);
    CHECK_FALSE(regressed);
    std::map<JobStatus, std::size_t> by_status;
    for (const auto& [id, entry] : parse_manifest(read_file(out.results_dir / "manifest"))) ++by_status[entry.result.status];
    std::size_t total = 0;
    for (const auto& [s, n] : by_status) total += n;
    CHECK(total == folder.scripts.size());
  }

  TEST_CASE("parallel workers run every job once and the report warns") {
    TempDir dir;
    const auto folder = testing::make_stub_folder(dir / "T", kEchoes, {"Amrhein", "Caprasse"});
    ControlChannel control;
    auto options = quiet_options();
    options.workers = 3;
    const auto out = run_all(folder, options, control);
    CHECK(count_status(out, JobStatus::completed) == 4);
    auto executed = out.executed;
    std::sort(executed.begin(), executed.end());
    CHECK(std::adjacent_find(executed.begin(), executed.end()) == executed.end());
    CHECK(executed.size() == 4);
    CHECK(read_results_xml(out.results_dir / "results.xml").workers == 3);
  }

  TEST_CASE("abort leaves no orphans") {
    TempDir dir;
    const auto folder = testing::make_stub_folder(
        dir / "T", {{"tree", "exec " + testing::spawn_tree_program().string() + " " + (dir / "pids").string() + " 30"}});
    ControlChannel::install_interrupt_handler();
    ControlChannel control;
    auto options = quiet_options();
    options.interrupts = true;
    std::thread interrupter([&] {
      testing::wait_for_pids(dir / "pids", 3, 5s);
      ControlChannel::simulate_interrupt();
      ControlChannel::simulate_interrupt();
    });
    const auto out = run_all(folder, options, control);
    interrupter.join();
    ControlChannel::restore_interrupt_handler();
    CHECK(out.aborted);
    const auto pids = testing::read_pids(dir / "pids");
    REQUIRE(pids.size() == 3);
    CHECK_FALSE(testing::process_alive(pids[0]));
    CHECK_FALSE(testing::process_alive(pids[1]));
    CHECK(testing::group_members(pids[2]).empty());
  }

  TEST_CASE("verifier gets the instance file from the resource root") {
    TempDir dir;
    const auto folder = testing::make_stub_folder(dir / "T", kEchoes);
    auto options = quiet_options();
    options.verifier = Verifier{"P", "grep -q Caprasse {output} && grep -q '<vars>' {instance}"};
    options.resource_root = testing::resources_dir();
    ControlChannel c1;
    auto out = run_all(folder, options, c1);
    for (const auto& r : out.results) CHECK(r.verdict == Verdict::accepted);
    options.verifier = Verifier{"P", "exit 1"};
    ControlChannel c2;
    out = run_all(folder, options, c2);
    for (const auto& r : out.results) CHECK(r.verdict == Verdict::rejected);
    options.resource_root.reset();
    ControlChannel c3;
    out = run_all(folder, options, c3);
    for (const auto& r : out.results) CHECK(r.verdict == Verdict::unchecked);
  }

  TEST_CASE("manifest round trip") {
    Manifest m;
    JobResult r;
    r.id = "A/casA";
    r.instance = "A";
    r.backend = "casA";
    r.status = JobStatus::timeout;
    r.times = TimeRecord{DecimalSeconds::from_micros(1'010'000), DecimalSeconds::from_micros(20'000), {}};
    r.wall = DecimalSeconds::from_micros(6'000'000);
    r.diagnostic = "wall limit";
    m["A/casA"] = ManifestEntry{"abc", r};
    CHECK(parse_manifest(serialize_manifest("T", m)).at("A/casA").result == r);
    CHECK_THROWS_AS(parse_manifest("[]"), Error);
  }

  TEST_CASE("results directory name") {
    const auto name = results_dir_name(std::chrono::system_clock::now());
    CHECK(name.size() == 19);
    CHECK(name[4] == '-');
    CHECK(name[10] == '_');
  }
}
