#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace casbench {

enum class ErrorKind {
  config,
  not_found,
  parse,
  validation,
  conflict,
  unsupported,
  render,
  build,
  integrity,
  io,
  query,
  resolution,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Location of a parse failure. `offset` is a byte offset into the input;
/// line and column are 1-based and zero when unknown.
struct SourcePosition {
  std::size_t line = 0;
  std::size_t column = 0;
  std::size_t offset = 0;
};

/// The single exception type thrown by the core library. `what()` carries a
/// machine-greppable "<kind>: " prefix followed by a human-readable reason.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  Error(ErrorKind kind, const std::string& message, SourcePosition position);

  ErrorKind kind() const noexcept { return kind_; }
  const std::optional<SourcePosition>& position() const noexcept { return position_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  ErrorKind kind_;
  std::string reason_;
  std::optional<SourcePosition> position_;
};

}  // namespace casbench
