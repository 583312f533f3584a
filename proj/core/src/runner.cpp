#include "casbench/runner.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "casbench/error.hpp"
#include "casbench/fsutil.hpp"
#include "casbench/reporting.hpp"
#include "casbench/supervisor.hpp"

namespace casbench {

using nlohmann::json;

namespace {

constexpr int kManifestFormat = 1;

json to_json(const JobResult& r) {
  json j;
  j["id"] = r.id;
  j["instance"] = r.instance;
  j["backend"] = r.backend;
  j["status"] = std::string(to_string(r.status));
  j["exit_code"] = r.exit_code ? json(*r.exit_code) : json(nullptr);
  if (r.times) {
    j["times"] = {{"real", format_seconds(r.times->real)},
                  {"user", format_seconds(r.times->user)},
                  {"sys", format_seconds(r.times->sys)}};
  } else {
    j["times"] = nullptr;
  }
  j["wall"] = format_seconds(r.wall);
  j["peak_rss_bytes"] = r.peak_rss_bytes;
  j["stdout"] = r.stdout_file;
  j["stderr"] = r.stderr_file;
  j["started"] = r.started;
  j["ended"] = r.ended;
  j["verdict"] = std::string(to_string(r.verdict));
  j["diagnostic"] = r.diagnostic;
  return j;
}

DecimalSeconds seconds_from(const json& j) {
  const auto v = parse_seconds(j.get<std::string>());
  if (!v) throw Error(ErrorKind::parse, "manifest: bad seconds value");
  return *v;
}

JobResult job_from_json(const json& j) {
  JobResult r;
  r.id = j.at("id").get<std::string>();
  r.instance = j.at("instance").get<std::string>();
  r.backend = j.at("backend").get<std::string>();
  const auto status = parse_job_status(j.at("status").get<std::string>());
  if (!status) throw Error(ErrorKind::parse, "manifest: bad status for " + r.id);
  r.status = *status;
  if (!j.at("exit_code").is_null()) r.exit_code = j.at("exit_code").get<int>();
  if (const auto& t = j.at("times"); !t.is_null()) {
    r.times = TimeRecord{seconds_from(t.at("real")), seconds_from(t.at("user")), seconds_from(t.at("sys"))};
  }
  r.wall = seconds_from(j.at("wall"));
  r.peak_rss_bytes = j.at("peak_rss_bytes").get<std::uint64_t>();
  r.stdout_file = j.at("stdout").get<std::string>();
  r.stderr_file = j.at("stderr").get<std::string>();
  r.started = j.at("started").get<std::string>();
  r.ended = j.at("ended").get<std::string>();
  const auto verdict = parse_verdict(j.at("verdict").get<std::string>());
  if (!verdict) throw Error(ErrorKind::parse, "manifest: bad verdict for " + r.id);
  r.verdict = *verdict;
  r.diagnostic = j.at("diagnostic").get<std::string>();
  return r;
}

}  // namespace

std::string serialize_manifest(const std::string& task, const Manifest& manifest) {
  json doc;
  doc["format"] = kManifestFormat;
  doc["task"] = task;
  doc["jobs"] = json::object();
  for (const auto& [id, entry] : manifest) {
    doc["jobs"][id] = {{"checksum", entry.checksum}, {"result", to_json(entry.result)}};
  }
  return doc.dump(2) + "\n";
}

Manifest parse_manifest(std::string_view text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<int>() != kManifestFormat) {
      throw Error(ErrorKind::parse, "manifest: unsupported format");
    }
    Manifest out;
    for (const auto& [id, entry] : doc.at("jobs").items()) {
      out[id] = ManifestEntry{entry.at("checksum").get<std::string>(), job_from_json(entry.at("result"))};
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("manifest: ") + e.what());
  }
}

std::string results_dir_name(std::chrono::system_clock::time_point when) {
  const auto t = std::chrono::system_clock::to_time_t(when);
  std::tm tm{};
  localtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%d_%H-%M-%S", &tm);
  return buf;
}

namespace {

struct JobSlot {
  const ScriptEntry* entry = nullptr;
  std::string checksum;
  JobResult result;
  std::atomic<bool> kill{false};
  bool aborted = false;
};

class Run {
 public:
  Run(const TaskFolder& folder, const RunOptions& options, ControlChannel& control,
      std::filesystem::path results_dir)
      : folder_(folder), options_(options), control_(control), dir_(std::move(results_dir)) {
    std::string warning;
    time_ = resolve_time_wrapper(folder.settings.time_command, &warning);
    if (!warning.empty()) log(warning);
    for (const auto& entry : folder.scripts) {
      auto& slot = slots_.emplace_back();
      slot.entry = &entry;
      slot.checksum = sha256_file(entry.script);
      slot.result.id = entry.job_id();
      slot.result.instance = entry.instance.name;
      slot.result.backend = entry.backend;
    }
  }

  void restore(const Manifest& manifest) {
    for (auto& slot : slots_) {
      const auto it = manifest.find(slot.result.id);
      if (it == manifest.end()) continue;
      if (!is_terminal(it->second.result.status)) continue;
      if (it->second.checksum != slot.checksum) {
        log("script of " + slot.result.id + " changed since the previous run; re-running it");
        continue;
      }
      slot.result = it->second.result;
    }
  }

  RunOutcome execute() {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create results directory " + dir_.string() + ": " + ec.message());
    const auto control_file = dir_ / "control";
    if (!std::filesystem::exists(control_file)) write_file_atomic(control_file, "");

    std::vector<std::string> ids;
    for (const auto& slot : slots_) ids.push_back(slot.result.id);
    control_.set_jobs(ids);
    std::size_t pending = 0;
    for (const auto& slot : slots_) {
      control_.set_status(slot.result.id, slot.result.status);
      if (slot.result.status == JobStatus::waiting) ++pending;
    }
    control_.attach_file(control_file);
    {
      std::lock_guard lock(mutex_);
      publish();
    }

    const unsigned workers = std::max(1u, std::min<unsigned>(options_.workers, static_cast<unsigned>(pending)));
    std::vector<std::thread> threads;
    if (pending > 0) {
      active_ = workers;
      for (unsigned i = 0; i < workers; ++i) threads.emplace_back([this] { worker(); });
    }
    while (true) {
      {
        std::unique_lock lock(mutex_);
        done_cv_.wait_for(lock, options_.control_poll, [this] { return active_ == 0; });
        if (active_ == 0) break;
      }
      service_control();
    }
    for (auto& t : threads) t.join();
    service_control();

    RunOutcome outcome;
    outcome.results_dir = dir_;
    outcome.executed = executed_;
    std::lock_guard lock(mutex_);
    outcome.aborted = aborted_;
    for (auto& slot : slots_) {
      if (slot.result.status == JobStatus::running) slot.result.status = JobStatus::waiting;
      outcome.results.push_back(slot.result);
    }
    publish();
    return outcome;
  }

 private:
  void log(std::string_view message) const {
    if (options_.log) options_.log(message);
  }

  void service_control() {
    for (const auto& ack : control_.poll_file()) log("control: " + ack.message);
    for (const auto& id : control_.take_kill_requests()) {
      std::lock_guard lock(mutex_);
      for (auto& slot : slots_) {
        if (slot.result.id != id) continue;
        if (slot.result.status == JobStatus::running) {
          slot.kill = true;
        } else if (slot.result.status == JobStatus::waiting) {
          slot.result.status = JobStatus::killed_by_user;
          slot.result.diagnostic = "removed from the queue on user request";
          control_.set_status(id, slot.result.status);
          log(id + ": dequeued (killed-by-user)");
          publish();
        }
      }
    }
    if (!options_.interrupts) return;
    switch (ControlChannel::take_interrupt()) {
      case ControlChannel::Interrupt::none:
        break;
      case ControlChannel::Interrupt::kill_running: {
        std::lock_guard lock(mutex_);
        for (auto& slot : slots_) {
          if (slot.result.status == JobStatus::running) {
            slot.kill = true;
            log("interrupt: killing " + slot.result.id + " (interrupt again within 2 s to abort the run)");
          }
        }
        break;
      }
      case ControlChannel::Interrupt::abort_run: {
        std::lock_guard lock(mutex_);
        if (!aborted_) log("interrupt: aborting run");
        aborted_ = true;
        for (auto& slot : slots_) {
          if (slot.result.status == JobStatus::running) {
            slot.aborted = true;
            slot.kill = true;
          }
        }
        break;
      }
    }
  }

  JobSlot* take_next() {
    if (aborted_) return nullptr;
    for (auto& slot : slots_) {
      if (slot.result.status == JobStatus::waiting) return &slot;
    }
    return nullptr;
  }

  void worker() {
    while (true) {
      JobSlot* slot;
      {
        std::lock_guard lock(mutex_);
        slot = take_next();
        if (slot == nullptr) break;
        slot->result.status = JobStatus::running;
        slot->result.started = utc_timestamp_now();
        control_.set_status(slot->result.id, JobStatus::running);
        publish();
      }
      JobResult result = run_one(*slot);
      {
        std::lock_guard lock(mutex_);
        if (slot->aborted) {
          slot->result = JobResult{};
          slot->result.id = slot->entry->job_id();
          slot->result.instance = slot->entry->instance.name;
          slot->result.backend = slot->entry->backend;
        } else {
          slot->result = std::move(result);
          executed_.push_back(slot->result.id);
          ++finished_;
        }
        control_.set_status(slot->result.id, slot->result.status);
        publish();
        if (!slot->aborted) {
          log("[" + std::to_string(finished_) + "] " + slot->result.id + " " +
              std::string(to_string(slot->result.status)) +
              (slot->result.times ? " real " + format_seconds(slot->result.times->real) + " s" : std::string()));
        }
      }
    }
    std::lock_guard lock(mutex_);
    if (--active_ == 0) done_cv_.notify_all();
  }

  JobResult run_one(JobSlot& slot) {
    const ScriptEntry& entry = *slot.entry;
    const auto rel = std::filesystem::path(entry.instance.name) / entry.backend;
    const auto job_dir = dir_ / rel;
    JobResult base = slot.result;
    base.stdout_file = (rel / "stdout.txt").generic_string();
    base.stderr_file = (rel / "stderr.txt").generic_string();
    try {
      std::filesystem::create_directories(job_dir);
      SuperviseRequest req;
      req.command = expand_invocation(folder_.invocation_for(entry.backend), entry.script.string());
      req.time = time_;
      req.working_dir = job_dir;
      req.stdout_path = job_dir / "stdout.txt";
      req.stderr_path = job_dir / "stderr.txt";
      req.environment = folder_.settings.environment;
      req.limits = options_.limits;
      req.sample_interval = options_.sample_interval;
      req.kill_switch = &slot.kill;
      req.warn = [this, id = base.id](std::string_view w) { log(id + ": " + std::string(w)); };
      JobResult r = supervise(req);
      r.id = base.id;
      r.instance = base.instance;
      r.backend = base.backend;
      r.stdout_file = base.stdout_file;
      r.stderr_file = base.stderr_file;
      if (r.status == JobStatus::completed && options_.verifier) {
        const auto instance_file = options_.resource_root
                                       ? *options_.resource_root / entry.instance.table / (entry.instance.name + ".xml")
                                       : std::filesystem::path();
        if (instance_file.empty() || !std::filesystem::exists(instance_file)) {
          log(base.id + ": no instance file for the verifier; verdict stays unchecked");
        } else {
          std::string why;
          r.verdict = verify_job(*options_.verifier, instance_file, req.stdout_path, &why);
          if (!why.empty()) log(base.id + ": " + why);
        }
      }
      return r;
    } catch (const std::exception& e) {
      base.status = JobStatus::error;
      base.diagnostic = e.what();
      base.ended = utc_timestamp_now();
      return base;
    }
  }

  /// Caller holds mutex_.
  void publish() {
    Manifest manifest;
    RunReport report;
    report.task = folder_.task.name;
    report.timestamp = dir_.filename().string();
    report.machine = options_.machine;
    report.limits = options_.limits;
    report.workers = std::max(1u, options_.workers);
    for (const auto& slot : slots_) {
      report.jobs.push_back(slot.result);
      if (is_terminal(slot.result.status)) manifest[slot.result.id] = ManifestEntry{slot.checksum, slot.result};
    }
    write_file_atomic(dir_ / "manifest", serialize_manifest(folder_.task.name, manifest));
    write_results_xml(report, dir_ / "results.xml");
    write_results_html(report, dir_ / "index.html");
  }

  const TaskFolder& folder_;
  const RunOptions& options_;
  ControlChannel& control_;
  std::filesystem::path dir_;
  TimeWrapper time_;
  std::deque<JobSlot> slots_;
  std::mutex mutex_;
  std::condition_variable done_cv_;
  unsigned active_ = 0;
  std::size_t finished_ = 0;
  bool aborted_ = false;
  std::vector<std::string> executed_;
};

std::filesystem::path fresh_results_dir(const TaskFolder& folder, const RunOptions& options) {
  const auto root = options.results_root.value_or(folder.root / "results");
  const std::string name = results_dir_name(std::chrono::system_clock::now());
  auto dir = root / name;
  for (int i = 1; std::filesystem::exists(dir); ++i) dir = root / (name + "_" + std::to_string(i));
  return dir;
}

}  // namespace

RunOutcome run_all(const TaskFolder& folder, const RunOptions& options, ControlChannel& control) {
  Run run(folder, options, control, fresh_results_dir(folder, options));
  return run.execute();
}

RunOutcome resume(const TaskFolder& folder, const std::filesystem::path& previous_results,
                  const RunOptions& options, ControlChannel& control) {
  if (!std::filesystem::is_directory(previous_results)) {
    throw Error(ErrorKind::io, "no results directory at " + previous_results.string());
  }
  Run run(folder, options, control, previous_results);
  const auto manifest_path = previous_results / "manifest";
  try {
    run.restore(parse_manifest(read_file(manifest_path)));
  } catch (const Error& e) {
    if (options.log) options.log("manifest unusable (" + std::string(e.what()) + "); re-running every job");
  }
  return run.execute();
}

}  // namespace casbench
