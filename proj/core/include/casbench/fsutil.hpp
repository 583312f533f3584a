#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace casbench {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path);

/// Writes via a sibling temporary and rename(2), so readers observe either
/// the old or the new content, never a partial file.
void write_file_atomic(const fs::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const fs::path& path);

/// Digest over every regular file below `root`: sorted relative paths and
/// their contents. Stable across machines for identical trees.
std::string tree_checksum(const fs::path& root);

/// Single-quotes `word` for /bin/sh.
std::string shell_quote(std::string_view word);

}  // namespace casbench
