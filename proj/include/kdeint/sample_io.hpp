#pragma once

#include "kdeint/sample.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace kdeint {

struct CsvOptions
{
  bool has_header = false;
  //! Treat the final column as the response.
  bool has_response = false;
};

//! One observation per row, comma separated. Malformed rows raise ParseError
//! carrying the 1-based line number.
Sample read_sample_csv(std::istream& in, const CsvOptions& opts = {});
Sample read_sample_csv(const std::filesystem::path& path,
                       const CsvOptions& opts = {});
void write_sample_csv(std::ostream& out, const Sample& s, bool header = false);

// Binary layout, little-endian:
//   bytes 0-3   magic "KDES"
//   bytes 4-7   n (uint32)
//   bytes 8-11  d (uint32)
//   bytes 12-15 flags (uint32, bit 0: response column present)
// followed by d columns of n float64 values (column-major), then the
// response column when flagged.
inline constexpr char binary_magic[4] = { 'K', 'D', 'E', 'S' };
inline constexpr std::uint32_t binary_flag_responses = 1u;

Sample read_sample_binary(std::istream& in);
Sample read_sample_binary(const std::filesystem::path& path);
void write_sample_binary(std::ostream& out, const Sample& s);
void write_sample_binary(const std::filesystem::path& path, const Sample& s);

} // namespace kdeint
