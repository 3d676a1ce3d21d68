#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mmhcl {

/// Shortest decimal text that round-trips a double exactly ("%.17g").
std::string format_double(double x);

/// Parse a decimal double; throws load_error with context on failure.
double parse_double(const std::string& s, const std::string& context);

/// Parse a non-negative integer; throws load_error with context on failure.
long parse_long(const std::string& s, const std::string& context);

/// Split one CSV line on commas. No quoting: field values must not
/// contain commas (enforced by the writers).
std::vector<std::string> split_csv_line(const std::string& line);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Little-endian 64-bit float block I/O for checkpoints.
void append_f64_le(std::string& out, double x);
double read_f64_le(const unsigned char* p);

/// FNV-1a 64-bit, used for config fingerprints and input hashes.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t x);

} // namespace mmhcl
