#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace iotgan {

/// Writes `content` to a sibling temp file and renames it over `path`.
/// Throws IoError on failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Whole file as a string; throws IoError if it cannot be read.
std::string read_file(const std::filesystem::path& path);

}  // namespace iotgan
