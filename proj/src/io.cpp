#include "capsim/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace capsim {

std::string format_double(double x) {
  char buf[40];
  if (x == (double)(long long)x && std::abs(x) < 9.0e15) {
    std::snprintf(buf, sizeof(buf), "%lld", (long long)x);
    return buf;
  }
  // 17 significant digits round-trip any IEEE double.
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  double back = 0.0;
  std::sscanf(buf, "%lg", &back);
  if (back == x) {
    // Try shorter forms for readability while preserving the exact value.
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, x);
      double b = 0.0;
      std::sscanf(shorter, "%lg", &b);
      if (b == x) return shorter;
    }
  }
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot open '" + tmp + "' for writing");
    out.write(content.data(), (std::streamsize)content.size());
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp + "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    const std::string why = std::strerror(errno);
    std::remove(tmp.c_str());
    throw std::runtime_error("rename '" + tmp + "' -> '" + path +
                             "' failed: " + why);
  }
}

std::string csv_cell(const std::string& text) {
  const bool needs_quotes =
      text.find_first_of(",\"\n") != std::string::npos || text.empty() ||
      text.front() == ' ' || text.back() == ' ';
  if (!needs_quotes) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ',';
    row += csv_cell(cells[i]);
  }
  row += '\n';
  return row;
}

}  // namespace capsim
