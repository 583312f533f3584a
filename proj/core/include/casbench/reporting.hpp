#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "casbench/job.hpp"
#include "casbench/registry.hpp"

namespace casbench {

/// Snapshot of a run: one entry per job of the task, including jobs that
/// are still waiting or running.
struct RunReport {
  std::string task;
  std::string timestamp;
  std::string machine;
  RunLimits limits;
  unsigned workers = 1;
  std::vector<JobResult> jobs;

  bool operator==(const RunReport&) const = default;
};

std::string render_results_xml(const RunReport& report);
std::string render_results_html(const RunReport& report);

/// Both writers replace the file atomically. Error{io} on failure.
void write_results_xml(const RunReport& report, const std::filesystem::path& path);
void write_results_html(const RunReport& report, const std::filesystem::path& path);

/// Inverse of render_results_xml. Error{parse} on malformed documents.
RunReport parse_results_xml(std::string_view text, std::string_view source = "results.xml");
RunReport read_results_xml(const std::filesystem::path& path);

/// Runs the verifier's command with `{instance}` and `{output}` replaced by
/// the quoted paths. Exit 0 accepts, 1 rejects; any other outcome,
/// including a crash, is unchecked and reported through `diagnostic`.
Verdict verify_job(const Verifier& verifier, const std::filesystem::path& instance_file,
                   const std::filesystem::path& output_file, std::string* diagnostic = nullptr);

/// Rows are instances, columns are backends (grouped by run timestamp
/// when several reports are given). Cells hold real seconds for finished
/// jobs with a time record, otherwise the status token.
struct TimingsTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Error{validation} if the reports belong to different tasks.
TimingsTable timings_table(std::span<const RunReport> reports);

/// Comma-separated, header first, one line per row.
std::string to_csv(const TimingsTable& table);

}  // namespace casbench
