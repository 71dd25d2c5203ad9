#include "kdeint/sample_io.hpp"

#include "kdeint/error.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fmt/core.h>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace kdeint {

namespace {

std::string_view
trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

double
parse_field(std::string_view field, std::size_t line, std::size_t column)
{
  field = trim(field);
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+')
    ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc() || ptr != last)
    throw ParseError(line,
                     fmt::format("column {}: cannot parse '{}' as a number",
                                 column + 1,
                                 field));
  if (!std::isfinite(v))
    throw ParseError(line, fmt::format("column {}: non-finite value", column + 1));
  return v;
}

void
put_u32(std::ostream& out, std::uint32_t v)
{
  std::array<char, 4> b{};
  for (int k = 0; k < 4; ++k)
    b[k] = static_cast<char>((v >> (8 * k)) & 0xffu);
  out.write(b.data(), 4);
}

std::uint32_t
get_u32(const unsigned char* p)
{
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void
put_f64(std::ostream& out, double v)
{
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  std::array<char, 8> b{};
  for (int k = 0; k < 8; ++k)
    b[k] = static_cast<char>((bits >> (8 * k)) & 0xffu);
  out.write(b.data(), 8);
}

double
get_f64(const unsigned char* p)
{
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k)
    bits |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  double v = 0.0;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

} // namespace

Sample
read_sample_csv(std::istream& in, const CsvOptions& opts)
{
  std::vector<double> points;
  std::vector<double> responses;
  std::size_t columns = 0;
  std::size_t line_no = 0;
  bool header_pending = opts.has_header;
  std::string line;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty())
      continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    row.clear();
    std::string_view rest(line);
    std::size_t col = 0;
    while (true) {
      const auto comma = rest.find(',');
      row.push_back(parse_field(rest.substr(0, comma), line_no, col++));
      if (comma == std::string_view::npos)
        break;
      rest.remove_prefix(comma + 1);
    }
    if (columns == 0) {
      columns = row.size();
      if (opts.has_response && columns < 2)
        throw ParseError(line_no,
                         "a response column needs at least one coordinate");
    } else if (row.size() != columns) {
      throw ParseError(line_no,
                       fmt::format("expected {} columns, found {}",
                                   columns,
                                   row.size()));
    }
    const std::size_t d = opts.has_response ? columns - 1 : columns;
    points.insert(points.end(), row.begin(), row.begin() + d);
    if (opts.has_response)
      responses.push_back(row.back());
  }
  if (columns == 0)
    throw ParseError(line_no, "no observations found");
  const std::size_t d = opts.has_response ? columns - 1 : columns;
  if (opts.has_response)
    return Sample(d, std::move(points), std::move(responses));
  return Sample(d, std::move(points));
}

Sample
read_sample_csv(const std::filesystem::path& path, const CsvOptions& opts)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::io_error,
                fmt::format("cannot open '{}' for reading", path.string()));
  return read_sample_csv(in, opts);
}

void
write_sample_csv(std::ostream& out, const Sample& s, bool header)
{
  if (header) {
    for (std::size_t k = 0; k < s.dim(); ++k)
      out << (k ? "," : "") << "x" << k + 1;
    if (s.has_responses())
      out << ",y";
    out << '\n';
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t k = 0; k < s.dim(); ++k)
      out << (k ? "," : "") << fmt::format("{:.17g}", s.coord(i, k));
    if (s.has_responses())
      out << ',' << fmt::format("{:.17g}", s.responses()[i]);
    out << '\n';
  }
}

Sample
read_sample_binary(std::istream& in)
{
  std::array<unsigned char, 16> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != 16)
    throw Error(ErrorCode::parse_error, "binary sample: truncated header");
  if (std::memcmp(header.data(), binary_magic, 4) != 0)
    throw Error(ErrorCode::parse_error, "binary sample: bad magic");
  const std::uint32_t n = get_u32(header.data() + 4);
  const std::uint32_t d = get_u32(header.data() + 8);
  const std::uint32_t flags = get_u32(header.data() + 12);
  if (d == 0)
    throw Error(ErrorCode::parse_error, "binary sample: zero dimension");
  const bool with_resp = (flags & binary_flag_responses) != 0;
  const std::size_t cols = d + (with_resp ? 1 : 0);
  std::vector<unsigned char> body(static_cast<std::size_t>(n) * cols * 8);
  in.read(reinterpret_cast<char*>(body.data()),
          static_cast<std::streamsize>(body.size()));
  if (static_cast<std::size_t>(in.gcount()) != body.size())
    throw Error(ErrorCode::parse_error, "binary sample: truncated body");
  std::vector<double> points(static_cast<std::size_t>(n) * d);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t i = 0; i < n; ++i)
      points[i * d + k] = get_f64(body.data() + (k * n + i) * 8);
  if (!with_resp)
    return Sample(d, std::move(points));
  std::vector<double> resp(n);
  for (std::size_t i = 0; i < n; ++i)
    resp[i] = get_f64(body.data() + (static_cast<std::size_t>(d) * n + i) * 8);
  return Sample(d, std::move(points), std::move(resp));
}

Sample
read_sample_binary(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::io_error,
                fmt::format("cannot open '{}' for reading", path.string()));
  return read_sample_binary(in);
}

void
write_sample_binary(std::ostream& out, const Sample& s)
{
  out.write(binary_magic, 4);
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  put_u32(out, static_cast<std::uint32_t>(s.dim()));
  put_u32(out, s.has_responses() ? binary_flag_responses : 0u);
  for (std::size_t k = 0; k < s.dim(); ++k)
    for (std::size_t i = 0; i < s.size(); ++i)
      put_f64(out, s.coord(i, k));
  if (s.has_responses())
    for (double y : s.responses())
      put_f64(out, y);
}

void
write_sample_binary(const std::filesystem::path& path, const Sample& s)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::io_error,
                fmt::format("cannot open '{}' for writing", path.string()));
  write_sample_binary(out, s);
}

} // namespace kdeint
