#pragma once

#include <filesystem>
#include <string>

namespace vce::io {

// Throws IoError.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);
void append_file(const std::filesystem::path& path, const std::string& content);
// Write to a sibling temp file, then rename over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string fixed(double v, int decimals);

}  // namespace vce::io
