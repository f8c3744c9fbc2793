#pragma once
// Output plumbing shared by the command-line front end: full-precision number
// formatting, atomic file writes, content digests for the run manifest, and
// CSV assembly with quoting for non-numeric headers.

#include <cstdint>
#include <string>
#include <vector>

namespace capsim {

inline constexpr const char* kToolVersion = "0.1.0";

// Shortest decimal form that round-trips a double exactly (%.17g trimmed).
std::string format_double(double x);

// 64-bit FNV-1a digest of a byte string.
std::uint64_t fnv1a64(const std::string& bytes);

// Write via a temporary file in the same directory, then rename into place,
// so readers never observe a partially written file.  Throws on I/O failure.
void write_file_atomic(const std::string& path, const std::string& content);

struct OutputFile {
  std::string path;
  std::uint64_t digest = 0;
  std::uint64_t bytes = 0;
};

// CSV quoting: numeric-looking cells pass through, anything else is quoted
// (labels contain commas, e.g. "g-3|0,0").
std::string csv_cell(const std::string& text);
std::string csv_row(const std::vector<std::string>& cells);

}  // namespace capsim
