#include "casbench/posix_time.hpp"

#include <cmath>

#include "casbench/error.hpp"

namespace casbench {

DecimalSeconds DecimalSeconds::from_seconds(double s) {
  if (!(s > 0)) return DecimalSeconds{0};
  return DecimalSeconds{static_cast<std::int64_t>(std::llround(s * 1e6))};
}

DecimalSeconds DecimalSeconds::centis() const noexcept {
  return DecimalSeconds{(micros + 5'000) / 10'000 * 10'000};
}

std::string format_seconds(DecimalSeconds value, int min_decimals) {
  const std::int64_t whole = value.micros / 1'000'000;
  std::string frac = std::to_string(value.micros % 1'000'000);
  frac.insert(0, 6 - frac.size(), '0');
  while (frac.size() > static_cast<std::size_t>(min_decimals) && frac.back() == '0') frac.pop_back();
  std::string out = std::to_string(whole);
  if (!frac.empty()) out += "." + frac;
  return out;
}

std::optional<DecimalSeconds> parse_seconds(std::string_view text) {
  if (text.empty()) return std::nullopt;
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  std::size_t i = 0;
  bool digits = false;
  for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i) {
    if (whole > 9'000'000'000'000LL) return std::nullopt;
    whole = whole * 10 + (text[i] - '0');
    digits = true;
  }
  int places = 0;
  if (i < text.size() && text[i] == '.') {
    for (++i; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i) {
      if (++places > 6) return std::nullopt;
      frac = frac * 10 + (text[i] - '0');
      digits = true;
    }
  }
  if (!digits || i != text.size()) return std::nullopt;
  for (; places < 6; ++places) frac *= 10;
  return DecimalSeconds{whole * 1'000'000 + frac};
}

std::string format_posix_time(const TimeRecord& record) {
  return "real " + format_seconds(record.real) + "\nuser " + format_seconds(record.user) + "\nsys " +
         format_seconds(record.sys) + "\n";
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// If `line` is "<key> <decimal>", returns the value text.
std::optional<std::string_view> field(std::string_view line, std::string_view key) {
  line = trim(line);
  if (!line.starts_with(key) || line.size() == key.size()) return std::nullopt;
  const char sep = line[key.size()];
  if (sep != ' ' && sep != '\t') return std::nullopt;
  return trim(line.substr(key.size()));
}

DecimalSeconds value_of(std::string_view key, std::string_view text) {
  if (!text.empty() && text.front() == '-') {
    throw Error(ErrorKind::parse, "time record: negative " + std::string(key) + " value " + std::string(text));
  }
  const auto v = parse_seconds(text);
  if (!v) throw Error(ErrorKind::parse, "time record: malformed " + std::string(key) + " value '" + std::string(text) + "'");
  return *v;
}

}  // namespace

TimeRecord parse_posix_time(std::string_view text) {
  std::optional<TimeRecord> last;
  std::optional<DecimalSeconds> real;
  std::optional<DecimalSeconds> user;
  bool saw_real = false;
  bool saw_user = false;

  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const std::string_view line =
        text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (const auto v = field(line, "real")) {
      real = value_of("real", *v);
      user.reset();
      saw_real = true;
    } else if (const auto v = field(line, "user"); v && real) {
      user = value_of("user", *v);
      saw_user = true;
    } else if (const auto v = field(line, "sys"); v && real && user) {
      last = TimeRecord{*real, *user, value_of("sys", *v)};
      real.reset();
      user.reset();
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (last) return *last;
  if (!saw_real) throw Error(ErrorKind::parse, "time record: missing 'real' line");
  if (!saw_user) throw Error(ErrorKind::parse, "time record: missing 'user' line");
  throw Error(ErrorKind::parse, "time record: missing 'sys' line");
}

}  // namespace casbench
