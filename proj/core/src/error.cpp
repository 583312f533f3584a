#include "casbench/error.hpp"

namespace casbench {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::render: return "render";
    case ErrorKind::build: return "build";
    case ErrorKind::integrity: return "integrity";
    case ErrorKind::io: return "io";
    case ErrorKind::query: return "query";
    case ErrorKind::resolution: return "resolution";
  }
  return "error";
}

namespace {

std::string compose(ErrorKind kind, const std::string& message,
                    const std::optional<SourcePosition>& pos) {
  std::string out(to_string(kind));
  out += ": ";
  out += message;
  if (pos) {
    if (pos->line > 0) {
      out += " (line " + std::to_string(pos->line) + ", column " +
             std::to_string(pos->column) + ")";
    } else {
      out += " (offset " + std::to_string(pos->offset) + ")";
    }
  }
  return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(compose(kind, message, std::nullopt)),
      kind_(kind),
      reason_(message) {}

Error::Error(ErrorKind kind, const std::string& message, SourcePosition position)
    : std::runtime_error(compose(kind, message, position)),
      kind_(kind),
      reason_(message),
      position_(position) {}

}  // namespace casbench
