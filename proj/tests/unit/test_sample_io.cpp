#include "kdeint/error.hpp"
#include "kdeint/sample.hpp"
#include "kdeint/sample_io.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

using namespace kdeint;

TEST(SampleIo, CsvRoundTrip)
{
  const Sample s(2, { 0.1, -2.5, 1e-300, 3.0 }, std::vector<double>{ 4.0, 5.5 });
  std::stringstream buf;
  write_sample_csv(buf, s, true);
  const Sample t = read_sample_csv(buf, { true, true });
  ASSERT_EQ(t.size(), 2u);
  ASSERT_EQ(t.dim(), 2u);
  EXPECT_TRUE(std::equal(s.data().begin(), s.data().end(), t.data().begin()));
  EXPECT_EQ(t.responses()[1], 5.5);
}

TEST(SampleIo, CsvWithoutResponses)
{
  std::istringstream in("0.5,1\n0.25,2\n\n0.125,3\n");
  const Sample s = read_sample_csv(in);
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.dim(), 2u);
  EXPECT_FALSE(s.has_responses());
  EXPECT_EQ(s.coord(2, 0), 0.125);
  try {
    (void)s.responses();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::missing_responses);
  }
}

TEST(SampleIo, MalformedRowReportsLine)
{
  std::istringstream in("x,y\n1,2\n3,abc\n");
  try {
    read_sample_csv(in, { true, false });
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
  }
  std::istringstream ragged("1,2\n3\n");
  try {
    read_sample_csv(ragged);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream inf("1\ninf\n");
  EXPECT_THROW(read_sample_csv(inf), ParseError);
}

TEST(SampleIo, BinaryRoundTrip)
{
  const Sample s(3, { 1, 2, 3, 4, 5, 6 }, std::vector<double>{ -1.0, 7.0 });
  std::stringstream buf;
  write_sample_binary(buf, s);
  const std::string bytes = buf.str();
  ASSERT_EQ(bytes.size(), 16u + 8u * 8u);
  EXPECT_EQ(bytes.substr(0, 4), "KDES");
  // Column-major: first column holds rows 0 and 1 of coordinate 0.
  double second;
  std::memcpy(&second, bytes.data() + 16 + 8, 8);
  EXPECT_EQ(second, 4.0);
  const Sample t = read_sample_binary(buf);
  EXPECT_TRUE(std::equal(s.data().begin(), s.data().end(), t.data().begin()));
  EXPECT_EQ(t.responses()[0], -1.0);
}

TEST(SampleIo, BinaryRejectsBadInput)
{
  auto code_of = [](std::stringstream& in) {
    try {
      read_sample_binary(in);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::check_failed;
  };
  std::stringstream bad("XXXX0000000000000000");
  EXPECT_EQ(code_of(bad), ErrorCode::parse_error);
  const Sample s(1, { 1.0, 2.0 });
  std::stringstream buf;
  write_sample_binary(buf, s);
  std::string bytes = buf.str();
  bytes.pop_back();
  std::stringstream truncated(bytes);
  EXPECT_EQ(code_of(truncated), ErrorCode::parse_error);
}

TEST(SampleIo, CanonicalOrderIsLexicographic)
{
  const Sample s(2, { 1.0, 0.0, 0.0, 5.0, 0.0, 1.0 });
  EXPECT_EQ(canonical_order(s), (std::vector<std::size_t>{ 2, 1, 0 }));
  const Sample c = canonicalize(s);
  EXPECT_EQ(c.coord(0, 1), 1.0);
}
