#include "kdeint/report.hpp"

#include "kdeint/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>
#include <fstream>
#include <ostream>

namespace kdeint {

std::string
format_number(double v)
{
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

void
write_rows_csv(std::ostream& out, const std::vector<ReplicationRow>& rows)
{
  out << "replication,n,variant,status,value,h,n_used,min_fhat\n";
  for (const auto& r : rows)
    out << r.replication << ',' << r.n << ',' << to_string(r.variant) << ','
        << r.status << ',' << format_number(r.value) << ','
        << format_number(r.h) << ',' << r.n_used << ','
        << format_number(r.min_fhat) << '\n';
}

void
write_timings_csv(std::ostream& out, const std::vector<ReplicationRow>& rows)
{
  out << "replication,n,variant,wall_seconds\n";
  for (const auto& r : rows)
    out << r.replication << ',' << r.n << ',' << to_string(r.variant) << ','
        << fmt::format("{:.6f}", r.wall_seconds) << '\n';
}

void
write_summary_csv(std::ostream& out, const std::vector<VariantSummary>& s)
{
  out << "variant,truth,ok,excluded,mean,bias,sd,rmse,min,q1,median,q3,max\n";
  for (const auto& v : s)
    out << to_string(v.variant) << ',' << format_number(v.truth) << ','
        << v.ok << ',' << v.excluded << ',' << format_number(v.box.mean) << ','
        << format_number(v.bias) << ',' << format_number(v.sd) << ','
        << format_number(v.rmse) << ',' << format_number(v.box.min) << ','
        << format_number(v.box.q1) << ',' << format_number(v.box.median)
        << ',' << format_number(v.box.q3) << ',' << format_number(v.box.max)
        << '\n';
}

namespace {

std::string
escape_xml(const std::string& s)
{
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

} // namespace

void
write_boxes_svg(std::ostream& out,
                const std::vector<VariantSummary>& s,
                const std::string& title)
{
  const double width = 200.0 * std::max<std::size_t>(1, s.size()) + 120.0;
  const double height = 420.0;
  const double top = 50.0, bottom = 360.0, left = 90.0;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& v : s) {
    if (v.ok == 0)
      continue;
    lo = std::min({ lo, v.box.min, v.truth });
    hi = std::max({ hi, v.box.max, v.truth });
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto y = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };

  out << fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" "
                     "height=\"{:.0f}\" font-family=\"sans-serif\" "
                     "font-size=\"11\">\n",
                     width, height);
  out << fmt::format("<text x=\"{:.1f}\" y=\"24\" font-size=\"14\">{}</text>\n",
                     left, escape_xml(title));
  out << fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" "
                     "y2=\"{2:.1f}\" stroke=\"black\"/>\n",
                     left - 10, top, bottom);
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    out << fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">"
                       "{:.4g}</text>\n",
                       left - 14, y(v) + 4, v);
  }

  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& v = s[i];
    const double cx = left + 60.0 + 200.0 * static_cast<double>(i);
    const std::string name(to_string(v.variant));
    out << fmt::format("<g class=\"box\" data-variant=\"{}\" data-count=\"{}\" "
                       "data-q1=\"{}\" data-median=\"{}\" data-q3=\"{}\" "
                       "data-min=\"{}\" data-max=\"{}\">\n",
                       name, v.ok, format_number(v.box.q1),
                       format_number(v.box.median), format_number(v.box.q3),
                       format_number(v.box.min), format_number(v.box.max));
    out << fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">"
                       "{} (n={})</text>\n",
                       cx, bottom + 20, name, v.ok);
    if (v.ok > 0) {
      const auto& b = v.box;
      out << fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.2f}\" x2=\"{0:.1f}\" "
                         "y2=\"{2:.2f}\" stroke=\"black\"/>\n",
                         cx, y(b.whisker_high), y(b.q3));
      out << fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.2f}\" x2=\"{0:.1f}\" "
                         "y2=\"{2:.2f}\" stroke=\"black\"/>\n",
                         cx, y(b.q1), y(b.whisker_low));
      out << fmt::format("<rect x=\"{:.1f}\" y=\"{:.2f}\" width=\"40\" "
                         "height=\"{:.2f}\" fill=\"#cfe0f3\" stroke=\"black\"/>\n",
                         cx - 20, y(b.q3), y(b.q1) - y(b.q3));
      out << fmt::format("<line x1=\"{:.1f}\" y1=\"{:.2f}\" x2=\"{:.1f}\" "
                         "y2=\"{:.2f}\" stroke=\"black\" stroke-width=\"2\"/>\n",
                         cx - 20, y(b.median), cx + 20, y(b.median));
      for (double o : { b.min, b.max })
        if (o < b.whisker_low || o > b.whisker_high)
          out << fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.2f}\" r=\"2\" "
                             "fill=\"none\" stroke=\"black\"/>\n",
                             cx, y(o));
      const char* labels[] = { "q3", "median", "q1" };
      const double values[] = { b.q3, b.median, b.q1 };
      for (int k = 0; k < 3; ++k)
        out << fmt::format("<text class=\"{}\" x=\"{:.1f}\" y=\"{:.2f}\">"
                           "{}</text>\n",
                           labels[k], cx + 26, y(values[k]) + 4,
                           format_number(values[k]));
    }
    out << "</g>\n";
  }
  if (!s.empty())
    out << fmt::format("<line x1=\"{:.1f}\" y1=\"{:.2f}\" x2=\"{:.1f}\" "
                       "y2=\"{:.2f}\" stroke=\"#c03030\" "
                       "stroke-dasharray=\"4 3\"/>\n",
                       left - 10, y(s.front().truth), width - 10,
                       y(s.front().truth));
  out << "</svg>\n";
}

void
write_clt_csv(std::ostream& out, const CltSummary& s)
{
  auto kv = [&](const char* key, const std::string& value) {
    out << key << ',' << value << '\n';
  };
  out << "quantity,value\n";
  kv("kind", s.kind);
  kv("n", std::to_string(s.n));
  kv("replications", std::to_string(s.replications));
  kv("excluded", std::to_string(s.excluded));
  kv("gamma", format_number(s.gamma));
  kv("h", format_number(s.h));
  kv("truth", format_number(s.truth));
  kv("mean", format_number(s.mean));
  kv("variance", format_number(s.variance));
  kv("theoretical_variance", format_number(s.theoretical_variance));
  kv("ratio", format_number(s.ratio));
  kv("ratio_doubled", format_number(s.ratio_doubled));
  kv("closer_factor", s.closer_factor);
  kv("alternative", "\"" + s.alternative_label + "\"");
  kv("alternative_variance", format_number(s.alternative_variance));
  kv("alternative_ratio", format_number(s.alternative_ratio));
  kv("ks_statistic", format_number(s.ks.statistic));
  kv("ks_critical_1pct", format_number(s.ks.critical_1pct));
  kv("ks_p_value", format_number(s.ks.p_value));
  kv("ks_rejected_1pct", s.ks.rejected_1pct ? "true" : "false");
  kv("window_ok", s.window.ok ? "true" : "false");
}

void
write_rate_csv(std::ostream& out, const RateResult& r)
{
  out << "variant,n,h,ok,excluded,rmse,log_rmse_variance,scaled_variance\n";
  for (const auto& p : r.points)
    out << to_string(p.variant) << ',' << p.n << ',' << format_number(p.h)
        << ',' << p.ok << ',' << p.excluded << ',' << format_number(p.rmse)
        << ',' << format_number(p.log_rmse_variance) << ','
        << format_number(p.scaled_variance) << '\n';
  out << "\nvariant,slope,slope_se,residual_se,intercept,c,gamma\n";
  for (const auto& f : r.fits)
    out << to_string(f.variant) << ',' << format_number(f.fit.slope) << ','
        << format_number(f.fit.slope_se) << ','
        << format_number(f.fit.residual_se) << ','
        << format_number(f.fit.intercept) << ',' << format_number(r.c) << ','
        << format_number(r.gamma) << '\n';
}

void
write_candidate_table_csv(std::ostream& out, const std::vector<CandidateRow>& table)
{
  out << "h,criterion,valid\n";
  for (const auto& c : table)
    out << format_number(c.h) << ','
        << (c.valid ? format_number(c.criterion) : std::string("nan")) << ','
        << (c.valid ? "true" : "false") << '\n';
}

namespace {

template<class Writer>
void
write_file(const std::filesystem::path& path, Writer&& w)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::io_error,
                fmt::format("cannot write '{}'", path.string()));
  w(out);
  if (!out)
    throw Error(ErrorCode::io_error,
                fmt::format("error while writing '{}'", path.string()));
}

void
ensure_dir(const std::filesystem::path& dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw Error(ErrorCode::io_error,
                fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
}

} // namespace

void
write_benchmark_outputs(const std::filesystem::path& dir,
                        const BenchmarkResult& r,
                        const std::string& title)
{
  ensure_dir(dir);
  write_file(dir / "rows.csv", [&](std::ostream& o) { write_rows_csv(o, r.rows); });
  write_file(dir / "timings.csv",
             [&](std::ostream& o) { write_timings_csv(o, r.rows); });
  write_file(dir / "summary.csv",
             [&](std::ostream& o) { write_summary_csv(o, r.summaries); });
  write_file(dir / "boxes.svg",
             [&](std::ostream& o) { write_boxes_svg(o, r.summaries, title); });
}

void
write_clt_outputs(const std::filesystem::path& dir, const CltSummary& s)
{
  ensure_dir(dir);
  write_file(dir / "rows.csv", [&](std::ostream& o) { write_rows_csv(o, s.rows); });
  write_file(dir / "timings.csv",
             [&](std::ostream& o) { write_timings_csv(o, s.rows); });
  write_file(dir / "clt.csv", [&](std::ostream& o) { write_clt_csv(o, s); });
}

void
write_rate_outputs(const std::filesystem::path& dir, const RateResult& r)
{
  ensure_dir(dir);
  write_file(dir / "rows.csv", [&](std::ostream& o) { write_rows_csv(o, r.rows); });
  write_file(dir / "timings.csv",
             [&](std::ostream& o) { write_timings_csv(o, r.rows); });
  write_file(dir / "rate.csv", [&](std::ostream& o) { write_rate_csv(o, r); });
}

} // namespace kdeint
