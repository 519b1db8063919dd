#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace gspplan {

// Shortest decimal representation that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view s);

// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

// Writes `contents` to `path` via a temporary sibling file and rename, so a
// reader never observes a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

// Parallelism cap from GSPPLAN_THREADS (>= 1); defaults to hardware concurrency.
unsigned thread_cap();

}  // namespace gspplan
