#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "casbench/control.hpp"
#include "casbench/job.hpp"
#include "casbench/registry.hpp"
#include "casbench/taskfolder.hpp"

namespace casbench {

struct RunOptions {
  RunLimits limits;
  /// Jobs supervised concurrently. Anything above 1 is flagged in reports.
  unsigned workers = 1;
  /// Parent of the timestamped results directory; defaults to
  /// `<taskfolder>/results`.
  std::optional<std::filesystem::path> results_root;
  std::optional<Verifier> verifier;
  /// Resource tree that supplies the verifier's instance file
  /// (`<root>/<table>/<instance>.xml`); the bundle itself carries none.
  std::optional<std::filesystem::path> resource_root;
  std::string machine;
  std::chrono::milliseconds control_poll{200};
  std::chrono::milliseconds sample_interval{100};
  /// Honour ControlChannel interrupts (the CLI installs the handler).
  bool interrupts = false;
  std::function<void(std::string_view)> log;
};

struct ManifestEntry {
  std::string checksum;
  JobResult result;
};

/// Job id -> entry, persisted as `manifest` (JSON) in the results directory.
using Manifest = std::map<std::string, ManifestEntry>;

std::string serialize_manifest(const std::string& task, const Manifest& manifest);
/// Error{parse} when the text is not a manifest.
Manifest parse_manifest(std::string_view text);

struct RunOutcome {
  std::filesystem::path results_dir;
  /// One per job, in job order.
  std::vector<JobResult> results;
  /// Jobs that ran in this invocation (not restored from a manifest).
  std::vector<std::string> executed;
  bool aborted = false;
};

/// Results directory name for a start time: YYYY-MM-DD_HH-MM-SS (local).
std::string results_dir_name(std::chrono::system_clock::time_point when);

/// Runs every job of the folder, instance-major then backend, under the
/// limits. Per-job failures are recorded, never thrown. Rewrites the
/// manifest, results.xml and index.html after each job. Throws Error{io}
/// when the results directory cannot be written.
RunOutcome run_all(const TaskFolder& folder, const RunOptions& options, ControlChannel& control);

/// Continues a previous run in its results directory. Jobs with a terminal
/// manifest entry whose script checksum still matches are kept; the rest
/// run again. A corrupt manifest means a full re-run.
RunOutcome resume(const TaskFolder& folder, const std::filesystem::path& previous_results,
                  const RunOptions& options, ControlChannel& control);

}  // namespace casbench
