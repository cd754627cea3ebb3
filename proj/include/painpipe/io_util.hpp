#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace painpipe {

/// Writes via a sibling temporary file and rename, so a failed write never
/// leaves a partial file at `path`. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace painpipe
