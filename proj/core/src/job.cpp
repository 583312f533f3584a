#include "casbench/job.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>

namespace casbench {

namespace {

constexpr std::array<std::pair<JobStatus, std::string_view>, 7> kStatusNames{{
    {JobStatus::waiting, "waiting"},
    {JobStatus::running, "running"},
    {JobStatus::completed, "completed"},
    {JobStatus::error, "error"},
    {JobStatus::timeout, "timeout"},
    {JobStatus::memout, "memout"},
    {JobStatus::killed_by_user, "killed-by-user"},
}};

}  // namespace

std::string_view to_string(JobStatus status) {
  for (const auto& [s, name] : kStatusNames) {
    if (s == status) return name;
  }
  return "unknown";
}

std::optional<JobStatus> parse_job_status(std::string_view text) {
  for (const auto& [s, name] : kStatusNames) {
    if (name == text) return s;
  }
  return std::nullopt;
}

bool is_terminal(JobStatus status) noexcept {
  return status != JobStatus::waiting && status != JobStatus::running;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::unchecked: return "unchecked";
    case Verdict::accepted: return "accepted";
    case Verdict::rejected: return "rejected";
  }
  return "unchecked";
}

std::optional<Verdict> parse_verdict(std::string_view text) {
  if (text == "unchecked") return Verdict::unchecked;
  if (text == "accepted") return Verdict::accepted;
  if (text == "rejected") return Verdict::rejected;
  return std::nullopt;
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

}  // namespace casbench
