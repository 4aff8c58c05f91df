#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace voltdmd::detail {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view bytes);

/// printf("%.*g") formatting.
std::string format_g(double value, int significant_digits);

}  // namespace voltdmd::detail
