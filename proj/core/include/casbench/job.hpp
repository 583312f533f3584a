#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "casbench/posix_time.hpp"

namespace casbench {

enum class JobStatus { waiting, running, completed, error, timeout, memout, killed_by_user };

std::string_view to_string(JobStatus status);
std::optional<JobStatus> parse_job_status(std::string_view text);
bool is_terminal(JobStatus status) noexcept;

enum class Verdict { unchecked, accepted, rejected };

std::string_view to_string(Verdict verdict);
std::optional<Verdict> parse_verdict(std::string_view text);

struct RunLimits {
  std::optional<DecimalSeconds> wall;
  std::optional<std::uint64_t> memory_bytes;
  DecimalSeconds grace = DecimalSeconds::from_micros(5'000'000);

  bool operator==(const RunLimits&) const = default;
};

/// Outcome of one (instance, backend) job. Output file references are
/// relative to the run's results directory.
struct JobResult {
  std::string id;
  std::string instance;
  std::string backend;
  JobStatus status = JobStatus::waiting;
  std::optional<int> exit_code;
  std::optional<TimeRecord> times;
  /// Supervisor's own wall clock, a cross-check on `times->real`.
  DecimalSeconds wall;
  std::uint64_t peak_rss_bytes = 0;
  std::string stdout_file;
  std::string stderr_file;
  std::string started;
  std::string ended;
  Verdict verdict = Verdict::unchecked;
  std::string diagnostic;

  bool operator==(const JobResult&) const = default;
};

/// UTC timestamp with milliseconds, e.g. "2026-10-18T09:15:02.125Z".
std::string utc_timestamp_now();

}  // namespace casbench
