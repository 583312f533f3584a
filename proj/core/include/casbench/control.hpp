#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "casbench/job.hpp"

namespace casbench {

struct KillAck {
  enum class Kind { accepted, already_finished, rejected };

  Kind kind = Kind::rejected;
  std::string message;
};

/// Out-of-band requests to a live run: `kill <job-id>` lines appended to
/// the run's control file, programmatic kill requests, and interrupt
/// signals. Thread-safe.
class ControlChannel {
 public:
  enum class Interrupt { none, kill_running, abort_run };

  /// Called by the runner once the results directory exists.
  void attach_file(std::filesystem::path path);
  const std::filesystem::path& file() const noexcept { return file_; }

  /// Declares the run's jobs; unknown ids are rejected afterwards.
  void set_jobs(const std::vector<std::string>& ids);
  void set_status(const std::string& id, JobStatus status);
  JobStatus status(const std::string& id) const;

  /// Validates and queues a kill. Running jobs are terminated and waiting
  /// jobs dequeued, both ending as killed-by-user; finished jobs are a
  /// no-op acknowledgement; unknown ids are rejected with the valid ids.
  KillAck request_kill(const std::string& job_id);

  /// Reads lines appended to the control file since the last poll and
  /// turns `kill <id>` lines into requests. Returns their acks.
  std::vector<KillAck> poll_file();

  std::vector<std::string> take_kill_requests();

  /// First SIGINT: kill the running job(s). A second one within two
  /// seconds: abort the run. Process-wide.
  static void install_interrupt_handler();
  static void restore_interrupt_handler();
  static Interrupt take_interrupt();
  /// Raises the same transitions as the signal handler; for tests.
  static void simulate_interrupt();

 private:
  mutable std::mutex mutex_;
  std::filesystem::path file_;
  std::uintmax_t offset_ = 0;
  std::string partial_;
  std::vector<std::string> order_;
  std::map<std::string, JobStatus> status_;
  std::vector<std::string> pending_;
};

/// Appends a `kill <job-id>` line to a run's control file.
void write_kill_command(const std::filesystem::path& control_file, std::string_view job_id);

}  // namespace casbench
