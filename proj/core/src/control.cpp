#include "casbench/control.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <ctime>
#include <fstream>

#include "casbench/error.hpp"

namespace casbench {

namespace {

std::atomic<bool> g_kill_running{false};
std::atomic<bool> g_abort{false};
std::atomic<std::int64_t> g_last_interrupt_ns{0};
struct sigaction g_previous {};
bool g_installed = false;

std::int64_t monotonic_ns() {
  timespec ts{};
  ::clock_gettime(CLOCK_MONOTONIC, &ts);
  return static_cast<std::int64_t>(ts.tv_sec) * 1'000'000'000 + ts.tv_nsec;
}

void note_interrupt() {
  const std::int64_t now = monotonic_ns();
  const std::int64_t last = g_last_interrupt_ns.exchange(now);
  if (last != 0 && now - last < 2'000'000'000) {
    g_abort.store(true);
  } else {
    g_kill_running.store(true);
  }
}

extern "C" void on_interrupt(int) { note_interrupt(); }

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

void ControlChannel::attach_file(std::filesystem::path path) {
  std::lock_guard lock(mutex_);
  file_ = std::move(path);
  std::error_code ec;
  offset_ = std::filesystem::exists(file_, ec) ? std::filesystem::file_size(file_, ec) : 0;
  if (ec) offset_ = 0;
  partial_.clear();
}

void ControlChannel::set_jobs(const std::vector<std::string>& ids) {
  std::lock_guard lock(mutex_);
  order_ = ids;
  status_.clear();
  for (const auto& id : ids) status_[id] = JobStatus::waiting;
}

void ControlChannel::set_status(const std::string& id, JobStatus status) {
  std::lock_guard lock(mutex_);
  status_[id] = status;
}

JobStatus ControlChannel::status(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = status_.find(id);
  return it == status_.end() ? JobStatus::waiting : it->second;
}

KillAck ControlChannel::request_kill(const std::string& job_id) {
  std::lock_guard lock(mutex_);
  const auto it = status_.find(job_id);
  if (it == status_.end()) {
    std::string valid;
    for (const auto& id : order_) valid += (valid.empty() ? "" : ", ") + id;
    return {KillAck::Kind::rejected, "unknown job '" + job_id + "'; valid ids: " + valid};
  }
  if (is_terminal(it->second)) {
    return {KillAck::Kind::already_finished, "job " + job_id + " already finished (" +
                                                 std::string(to_string(it->second)) + ")"};
  }
  if (std::find(pending_.begin(), pending_.end(), job_id) == pending_.end()) pending_.push_back(job_id);
  return {KillAck::Kind::accepted, "kill of " + job_id + " accepted"};
}

std::vector<KillAck> ControlChannel::poll_file() {
  std::vector<std::string> lines;
  {
    std::lock_guard lock(mutex_);
    if (file_.empty()) return {};
    std::ifstream in(file_, std::ios::binary);
    if (!in) return {};
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::uintmax_t>(in.tellg());
    if (size < offset_) offset_ = 0;  // truncated by the user; start over
    if (size == offset_) return {};
    in.seekg(static_cast<std::streamoff>(offset_));
    std::string chunk(size - offset_, '\0');
    in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    offset_ = size;
    partial_ += chunk;
    std::size_t nl;
    while ((nl = partial_.find('\n')) != std::string::npos) {
      lines.push_back(trim(std::string_view(partial_).substr(0, nl)));
      partial_.erase(0, nl + 1);
    }
  }
  std::vector<KillAck> acks;
  for (const auto& line : lines) {
    if (line.empty() || line.front() == '#') continue;
    if (line.rfind("kill ", 0) == 0) {
      acks.push_back(request_kill(trim(std::string_view(line).substr(5))));
    } else {
      acks.push_back({KillAck::Kind::rejected, "unrecognised control command '" + line + "'"});
    }
  }
  return acks;
}

std::vector<std::string> ControlChannel::take_kill_requests() {
  std::lock_guard lock(mutex_);
  return std::exchange(pending_, {});
}

void ControlChannel::install_interrupt_handler() {
  g_kill_running.store(false);
  g_abort.store(false);
  g_last_interrupt_ns.store(0);
  struct sigaction sa {};
  sa.sa_handler = on_interrupt;
  sigemptyset(&sa.sa_mask);
  sa.sa_flags = SA_RESTART;
  ::sigaction(SIGINT, &sa, &g_previous);
  g_installed = true;
}

void ControlChannel::restore_interrupt_handler() {
  if (g_installed) ::sigaction(SIGINT, &g_previous, nullptr);
  g_installed = false;
}

ControlChannel::Interrupt ControlChannel::take_interrupt() {
  if (g_abort.load()) return Interrupt::abort_run;
  if (g_kill_running.exchange(false)) return Interrupt::kill_running;
  return Interrupt::none;
}

void ControlChannel::simulate_interrupt() { note_interrupt(); }

void write_kill_command(const std::filesystem::path& control_file, std::string_view job_id) {
  std::ofstream out(control_file, std::ios::app);
  if (!out) throw Error(ErrorKind::io, "cannot append to control file " + control_file.string());
  out << "kill " << job_id << '\n';
}

}  // namespace casbench
