#include "casbench/reporting.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "casbench/error.hpp"
#include "casbench/fsutil.hpp"
#include "casbench/supervisor.hpp"
#include "casbench/xml.hpp"

namespace casbench {

namespace {

std::string format_bytes_mb(std::uint64_t bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f MB", static_cast<double>(bytes) / (1024.0 * 1024.0));
  return buf;
}

}  // namespace

std::string render_results_xml(const RunReport& report) {
  xml::Element root{"Run", {}, {}, {}};
  root.add_child("task", report.task);
  root.add_child("timestamp", report.timestamp);
  root.add_child("machine", report.machine);
  auto& limits = root.add_child("limits");
  if (report.limits.wall) limits.add_child("wall", format_seconds(*report.limits.wall));
  if (report.limits.memory_bytes) limits.add_child("memory", std::to_string(*report.limits.memory_bytes));
  limits.add_child("grace", format_seconds(report.limits.grace));
  limits.add_child("workers", std::to_string(report.workers));
  for (const auto& job : report.jobs) {
    auto& j = root.add_child("job");
    j.set_attribute("id", job.id).set_attribute("instance", job.instance).set_attribute("backend", job.backend);
    j.add_child("status", std::string(to_string(job.status)));
    if (job.exit_code) j.add_child("exitCode", std::to_string(*job.exit_code));
    if (job.times) {
      j.add_child("real", format_seconds(job.times->real));
      j.add_child("user", format_seconds(job.times->user));
      j.add_child("sys", format_seconds(job.times->sys));
    }
    j.add_child("wall", format_seconds(job.wall));
    j.add_child("peakRSS", std::to_string(job.peak_rss_bytes));
    j.add_child("verdict", std::string(to_string(job.verdict)));
    if (!job.stdout_file.empty()) j.add_child("stdout", job.stdout_file);
    if (!job.stderr_file.empty()) j.add_child("stderr", job.stderr_file);
    if (!job.started.empty()) j.add_child("started", job.started);
    if (!job.ended.empty()) j.add_child("ended", job.ended);
    if (!job.diagnostic.empty()) j.add_child("diagnostic", job.diagnostic);
  }
  return xml::serialize(root);
}

void write_results_xml(const RunReport& report, const std::filesystem::path& path) {
  write_file_atomic(path, render_results_xml(report));
}

namespace {

[[noreturn]] void bad(std::string_view source, const std::string& what) {
  throw Error(ErrorKind::parse, std::string(source) + ": " + what);
}

DecimalSeconds seconds_field(const xml::Element& e, std::string_view source) {
  const auto v = parse_seconds(e.text);
  if (!v) bad(source, "<" + e.name + "> is not a decimal number of seconds");
  return *v;
}

template <typename Int>
Int integer_field(const xml::Element& e, std::string_view source) {
  Int value{};
  const auto* first = e.text.data();
  const auto* last = first + e.text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || e.text.empty()) bad(source, "<" + e.name + "> is not an integer");
  return value;
}

std::string text_of(const xml::Element& parent, std::string_view name) {
  const auto* c = parent.child(name);
  return c == nullptr ? std::string() : c->text;
}

}  // namespace

RunReport parse_results_xml(std::string_view text, std::string_view source) {
  const xml::Element root = xml::parse(text, source);
  if (root.name != "Run") bad(source, "root element must be <Run>");
  RunReport report;
  if (root.child("task") == nullptr) bad(source, "missing <task>");
  if (root.child("timestamp") == nullptr) bad(source, "missing <timestamp>");
  if (root.child("limits") == nullptr) bad(source, "missing <limits>");
  report.task = text_of(root, "task");
  report.timestamp = text_of(root, "timestamp");
  report.machine = text_of(root, "machine");
  if (const auto* limits = root.child("limits")) {
    if (const auto* w = limits->child("wall")) report.limits.wall = seconds_field(*w, source);
    if (const auto* m = limits->child("memory")) report.limits.memory_bytes = integer_field<std::uint64_t>(*m, source);
    if (const auto* g = limits->child("grace")) report.limits.grace = seconds_field(*g, source);
    if (const auto* n = limits->child("workers")) report.workers = integer_field<unsigned>(*n, source);
  }
  for (const auto* j : root.children_named("job")) {
    JobResult job;
    job.id = j->attribute("id").value_or("");
    if (job.id.empty()) bad(source, "<job> without id");
    job.instance = j->attribute("instance").value_or("");
    job.backend = j->attribute("backend").value_or("");
    const auto status = parse_job_status(text_of(*j, "status"));
    if (!status) bad(source, "job " + job.id + " has an invalid status");
    job.status = *status;
    if (const auto* e = j->child("exitCode")) job.exit_code = integer_field<int>(*e, source);
    const auto* real = j->child("real");
    const auto* user = j->child("user");
    const auto* sys = j->child("sys");
    if (real && user && sys) {
      job.times = TimeRecord{seconds_field(*real, source), seconds_field(*user, source), seconds_field(*sys, source)};
    } else if (real || user || sys) {
      bad(source, "job " + job.id + " has an incomplete time record");
    }
    if (const auto* w = j->child("wall")) job.wall = seconds_field(*w, source);
    if (const auto* m = j->child("peakRSS")) job.peak_rss_bytes = integer_field<std::uint64_t>(*m, source);
    if (const auto* v = j->child("verdict")) {
      const auto verdict = parse_verdict(v->text);
      if (!verdict) bad(source, "job " + job.id + " has an invalid verdict");
      job.verdict = *verdict;
    }
    job.stdout_file = text_of(*j, "stdout");
    job.stderr_file = text_of(*j, "stderr");
    job.started = text_of(*j, "started");
    job.ended = text_of(*j, "ended");
    job.diagnostic = text_of(*j, "diagnostic");
    report.jobs.push_back(std::move(job));
  }
  return report;
}

RunReport read_results_xml(const std::filesystem::path& path) {
  return parse_results_xml(read_file(path), path.string());
}

std::string render_results_html(const RunReport& report) {
  const auto esc = [](std::string_view s) { return xml::escape(s, true); };
  std::size_t done = 0;
  std::map<JobStatus, std::size_t> counts;
  for (const auto& j : report.jobs) {
    ++counts[j.status];
    if (is_terminal(j.status)) ++done;
  }
  const bool live = done < report.jobs.size();

  std::string h;
  h += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
  if (live) h += "<meta http-equiv=\"refresh\" content=\"5\">\n";
  h += "<title>" + esc(report.task) + " &#8211; " + esc(report.timestamp) + "</title>\n";
  h += "<style>\n"
       "body{font-family:sans-serif;margin:1.5em}\n"
       "table{border-collapse:collapse}\n"
       "th,td{border:1px solid #bbb;padding:.25em .6em;text-align:left}\n"
       "td.num{text-align:right;font-family:monospace}\n"
       ".waiting{background:#eeeeee}.running{background:#cfe2ff}.completed{background:#d1e7dd}\n"
       ".error{background:#f8d7da}.timeout{background:#fff3cd}.memout{background:#ffe5d0}\n"
       ".killed-by-user{background:#e2d9f3}\n"
       ".warning{color:#842029;font-weight:bold}\n"
       "</style>\n</head>\n<body>\n";
  h += "<h1>Task " + esc(report.task) + "</h1>\n<p>Run " + esc(report.timestamp);
  if (!report.machine.empty()) h += " on " + esc(report.machine);
  h += "<br>Wall limit: " + (report.limits.wall ? format_seconds(*report.limits.wall) + " s" : std::string("none"));
  h += ", memory limit: " + (report.limits.memory_bytes ? format_bytes_mb(*report.limits.memory_bytes) : std::string("none"));
  h += ", grace: " + format_seconds(report.limits.grace) + " s";
  h += "<br>" + std::to_string(done) + " of " + std::to_string(report.jobs.size()) + " jobs finished";
  h += "</p>\n";
  if (report.workers > 1) {
    h += "<p class=\"warning\">" + std::to_string(report.workers) +
         " jobs ran in parallel; timings are not suitable for publication.</p>\n";
  }
  h += "<table>\n<thead><tr><th>Job</th><th>Status</th><th>Exit</th><th>Real [s]</th><th>User [s]</th>"
       "<th>Sys [s]</th><th>Wall [s]</th><th>Peak RSS</th><th>Verdict</th><th>Output</th></tr></thead>\n<tbody>\n";
  for (const auto& j : report.jobs) {
    const std::string status(to_string(j.status));
    std::string status_cell = status;
    if (j.status == JobStatus::timeout && report.limits.wall) {
      status_cell += " (limit " + format_seconds(*report.limits.wall) + " s)";
    } else if (j.status == JobStatus::memout && report.limits.memory_bytes) {
      status_cell += " (limit " + format_bytes_mb(*report.limits.memory_bytes) + ")";
    }
    const bool ran = j.status != JobStatus::waiting;
    h += "<tr class=\"" + status + "\"><td>" + esc(j.id) + "</td><td>" + esc(status_cell) + "</td>";
    h += "<td class=\"num\">" + (j.exit_code ? std::to_string(*j.exit_code) : std::string()) + "</td>";
    for (const auto* v : {j.times ? &j.times->real : nullptr, j.times ? &j.times->user : nullptr,
                          j.times ? &j.times->sys : nullptr}) {
      h += "<td class=\"num\">" + (v ? format_seconds(*v) : std::string()) + "</td>";
    }
    h += "<td class=\"num\">" + (is_terminal(j.status) ? format_seconds(j.wall) : std::string()) + "</td>";
    h += "<td class=\"num\">" + (ran ? format_bytes_mb(j.peak_rss_bytes) : std::string()) + "</td>";
    h += "<td>" + std::string(to_string(j.verdict)) + "</td><td>";
    if (ran && !j.stdout_file.empty()) h += "<a href=\"" + esc(j.stdout_file) + "\">stdout</a> ";
    if (ran && !j.stderr_file.empty()) h += "<a href=\"" + esc(j.stderr_file) + "\">stderr</a>";
    h += "</td></tr>\n";
  }
  h += "</tbody>\n</table>\n</body>\n</html>\n";
  return h;
}

void write_results_html(const RunReport& report, const std::filesystem::path& path) {
  write_file_atomic(path, render_results_html(report));
}

Verdict verify_job(const Verifier& verifier, const std::filesystem::path& instance_file,
                   const std::filesystem::path& output_file, std::string* diagnostic) {
  std::string command = verifier.command;
  const auto replace_all = [&](std::string_view token, const std::string& value) {
    for (auto at = command.find(token); at != std::string::npos; at = command.find(token, at + value.size())) {
      command.replace(at, token.size(), value);
    }
  };
  replace_all("{instance}", shell_quote(instance_file.string()));
  replace_all("{output}", shell_quote(output_file.string()));
  std::string why;
  const auto code = run_helper(command, std::chrono::seconds(600), &why);
  if (code && *code == 0) return Verdict::accepted;
  if (code && *code == 1) return Verdict::rejected;
  if (diagnostic != nullptr) {
    *diagnostic = code ? "verifier exited with " + std::to_string(*code) : "verifier failed: " + why;
  }
  return Verdict::unchecked;
}

TimingsTable timings_table(std::span<const RunReport> reports) {
  TimingsTable table;
  if (reports.empty()) return table;
  for (const auto& r : reports) {
    if (r.task != reports.front().task) {
      throw Error(ErrorKind::validation,
                  "cannot tabulate runs of different tasks (" + reports.front().task + ", " + r.task + ")");
    }
  }
  std::vector<std::string> instances;
  std::vector<std::string> backends;
  for (const auto& r : reports) {
    for (const auto& j : r.jobs) {
      if (std::find(instances.begin(), instances.end(), j.instance) == instances.end()) instances.push_back(j.instance);
      if (std::find(backends.begin(), backends.end(), j.backend) == backends.end()) backends.push_back(j.backend);
    }
  }
  const bool grouped = reports.size() > 1;
  table.header.push_back("instance");
  for (const auto& r : reports) {
    for (const auto& b : backends) table.header.push_back(grouped ? r.timestamp + "/" + b : b);
  }
  for (const auto& inst : instances) {
    std::vector<std::string> row{inst};
    for (const auto& r : reports) {
      for (const auto& b : backends) {
        const auto it = std::find_if(r.jobs.begin(), r.jobs.end(),
                                     [&](const JobResult& j) { return j.instance == inst && j.backend == b; });
        if (it == r.jobs.end()) {
          row.emplace_back();
        } else if (it->status == JobStatus::completed && it->times) {
          row.push_back(format_seconds(it->times->real));
        } else {
          row.emplace_back(to_string(it->status));
        }
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string to_csv(const TimingsTable& table) {
  const auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  const auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out += ',';
      out += field(cells[i]);
    }
    return out + "\n";
  };
  std::string out = line(table.header);
  for (const auto& r : table.rows) out += line(r);
  return out;
}

}  // namespace casbench
