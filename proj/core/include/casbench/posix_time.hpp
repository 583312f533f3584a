#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace casbench {

/// Non-negative decimal seconds held as an exact microsecond count, so
/// decimal text survives a format/parse round trip.
struct DecimalSeconds {
  std::int64_t micros = 0;

  static constexpr DecimalSeconds from_micros(std::int64_t us) { return DecimalSeconds{us}; }
  static DecimalSeconds from_seconds(double s);

  double seconds() const noexcept { return static_cast<double>(micros) / 1e6; }
  /// Rounded half-up to hundredths.
  DecimalSeconds centis() const noexcept;

  auto operator<=>(const DecimalSeconds&) const = default;
};

/// Exact decimal text with at least `min_decimals` digits after the point
/// ("3.05", "1.50", "0.000125").
std::string format_seconds(DecimalSeconds value, int min_decimals = 2);

/// Parses "12", "3.05", ".5". At most six decimals; signs are rejected.
std::optional<DecimalSeconds> parse_seconds(std::string_view text);

struct TimeRecord {
  DecimalSeconds real;
  DecimalSeconds user;
  DecimalSeconds sys;

  bool operator==(const TimeRecord&) const = default;
};

/// "real R\nuser U\nsys S\n", the `time -p` layout.
std::string format_posix_time(const TimeRecord& record);

/// Extracts the last complete real/user/sys record from a job's error
/// stream; unrelated lines before, between or after are ignored. Throws
/// Error{parse} naming the missing line, or on a negative value.
TimeRecord parse_posix_time(std::string_view text);

}  // namespace casbench
