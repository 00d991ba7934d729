#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lownoise/common.hpp"

namespace lownoise::io {

/// Shortest text that parses back to the same double.
std::string format_double(double v);

std::string read_file(const std::string& path);

/// write-temp-then-rename so partially written files are never observed.
void write_file_atomic(const std::string& path, const std::string& content);

bool file_exists(const std::string& path);

void ensure_dir(const std::string& path);

/// FNV-1a 64 of the content, hex encoded.
std::string content_hash_hex(const std::string& content);

/// CSV helpers: rows of doubles under a fixed header line.
std::string csv_from_rows(const std::string& header, const std::vector<std::vector<double>>& rows);

}  // namespace lownoise::io
